"""Shared domain types, the action grammar and element text representation."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence, Tuple, Union

import numpy as np

if TYPE_CHECKING:
    from .phash import Hash64

Bounds = Tuple[int, int, int, int]  # x0, y0, x1, y1 (exclusive right/bottom)

REPR_SEPARATOR = " | "
SCROLL_DIRECTIONS = ("up", "down", "left", "right")


class ActionParseError(ValueError):
    pass


class NoActionFound(ActionParseError):
    pass


class IndexOutOfRange(ActionParseError):
    pass


@dataclass(frozen=True)
class TaskGoal:
    instruction: str
    goal_predicate_id: str
    max_steps: int = 25
    wall_budget: float = 3600.0  # seconds of virtual time

    def __post_init__(self):
        if not self.instruction.strip():
            raise ValueError("instruction must be nonempty")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not self.wall_budget > 0:
            raise ValueError("wall_budget must be > 0")


@dataclass(frozen=True)
class UiElement:
    index: int
    label: str = ""
    description: str = ""
    resource_id: str = ""
    bounds: Bounds = (0, 0, 1, 1)
    clickable: bool = True

    @property
    def name(self) -> str:
        """Short human-facing name: the first nonempty text field."""
        return self.label or self.description or self.resource_id

    @property
    def center(self) -> Tuple[int, int]:
        x0, y0, x1, y1 = self.bounds
        return (x0 + x1) // 2, (y0 + y1) // 2

    def contains(self, x: int, y: int) -> bool:
        x0, y0, x1, y1 = self.bounds
        return x0 <= x < x1 and y0 <= y < y1


@dataclass(frozen=True, eq=False)
class ScreenSnapshot:
    raster: np.ndarray
    elements: Tuple[UiElement, ...]
    capture_time: float = 0.0

    def __post_init__(self):
        raster = np.asarray(self.raster, dtype=np.uint8)
        if raster.ndim != 2:
            raise ValueError("raster must be a 2-D grayscale image")
        if raster.flags.writeable:
            raster = raster.copy()
            raster.flags.writeable = False
        object.__setattr__(self, "raster", raster)
        object.__setattr__(self, "elements", tuple(self.elements))
        seen = set()
        for e in self.elements:
            if e.index in seen:
                raise ValueError(f"duplicate element index {e.index}")
            seen.add(e.index)

    @property
    def size(self) -> Tuple[int, int]:
        h, w = self.raster.shape
        return w, h

    def element(self, index: int) -> UiElement:
        for e in self.elements:
            if e.index == index:
                return e
        raise IndexOutOfRange(f"no element {index} on screen with {len(self.elements)} elements")

    def find(self, name: str) -> Optional[UiElement]:
        for e in self.elements:
            if e.name == name:
                return e
        return None


class ActionKind(enum.Enum):
    CLICK_INDEX = "ClickIndex"
    CLICK_XY = "ClickXY"
    TYPE_TEXT = "TypeText"
    SCROLL = "Scroll"
    BACK = "Back"
    HOME = "Home"
    OPEN_APP = "OpenApp"
    DONE = "Done"


Payload = Union[None, int, str, Tuple[int, int]]


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    payload: Payload = None

    def __post_init__(self):
        k, p = self.kind, self.payload
        if k is ActionKind.CLICK_INDEX and not isinstance(p, int):
            raise ValueError("ClickIndex needs an integer payload")
        if k is ActionKind.CLICK_XY and not (isinstance(p, tuple) and len(p) == 2):
            raise ValueError("ClickXY needs an (x, y) payload")
        if k in (ActionKind.TYPE_TEXT, ActionKind.OPEN_APP) and not isinstance(p, str):
            raise ValueError(f"{k.value} needs a text payload")
        if k is ActionKind.SCROLL and p not in SCROLL_DIRECTIONS:
            raise ValueError(f"scroll direction must be one of {SCROLL_DIRECTIONS}")
        if k in (ActionKind.BACK, ActionKind.HOME, ActionKind.DONE) and p is not None:
            raise ValueError(f"{k.value} takes no payload")

    @classmethod
    def click(cls, index: int) -> "Action":
        return cls(ActionKind.CLICK_INDEX, index)

    @classmethod
    def back(cls) -> "Action":
        return cls(ActionKind.BACK)

    @classmethod
    def home(cls) -> "Action":
        return cls(ActionKind.HOME)

    @classmethod
    def done(cls) -> "Action":
        return cls(ActionKind.DONE)

    def render(self) -> str:
        return render_action(self)

    def __str__(self) -> str:
        return render_action(self)


@dataclass(frozen=True)
class TraceEntry:
    step: int
    action: Action
    screen_hash: "Hash64"
    target_repr: str = ""  # repr of the clicked element, for replay by identity


@dataclass
class InteractionTrace:
    """Append-only log of main-trajectory actions since task start."""

    entries: list = field(default_factory=list)

    def append(self, step: int, action: Action, screen_hash: "Hash64", target_repr: str = "") -> TraceEntry:
        if step < 1:
            raise ValueError("trace steps start at 1")
        if self.entries and step <= self.entries[-1].step:
            raise ValueError(f"step {step} does not follow {self.entries[-1].step}")
        entry = TraceEntry(step, action, screen_hash, target_repr)
        self.entries.append(entry)
        return entry

    def actions(self) -> list:
        return [e.action for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def element_text_repr(e: UiElement) -> str:
    return REPR_SEPARATOR.join(f for f in (e.label, e.description, e.resource_id) if f)


# --- action grammar -------------------------------------------------------

_QUOTED = r'"((?:[^"\\]|\\.)*)"'
_INT = r"(-?\d+)"
_GRAMMAR = re.compile(
    "|".join(
        [
            rf"(?P<click_xy>\bCLICK_XY\s*\(\s*{_INT}\s*,\s*{_INT}\s*\))",
            rf"(?P<click>\bCLICK\s*\(\s*{_INT}\s*\))",
            rf"(?P<type>\bTYPE\s*\(\s*{_QUOTED}\s*\))",
            r"(?P<scroll>\bSCROLL\s*\(\s*(up|down|left|right)\s*\))",
            rf"(?P<open_app>\bOPEN_APP\s*\(\s*{_QUOTED}\s*\))",
            r"(?P<back>\bBACK\b)",
            r"(?P<home>\bHOME\b)",
            r"(?P<done>\bDONE\b)",
        ]
    ),
    re.IGNORECASE | re.DOTALL,
)


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _unquote(body: str) -> str:
    return re.sub(r"\\(.)", r"\1", body, flags=re.DOTALL)


def render_action(a: Action) -> str:
    """Canonical grammar string for an action; parse_action inverts it."""
    k = a.kind
    if k is ActionKind.CLICK_INDEX:
        return f"CLICK({a.payload})"
    if k is ActionKind.CLICK_XY:
        x, y = a.payload
        return f"CLICK_XY({x},{y})"
    if k is ActionKind.TYPE_TEXT:
        return f"TYPE({_quote(a.payload)})"
    if k is ActionKind.SCROLL:
        return f"SCROLL({a.payload})"
    if k is ActionKind.OPEN_APP:
        return f"OPEN_APP({_quote(a.payload)})"
    return {ActionKind.BACK: "BACK", ActionKind.HOME: "HOME", ActionKind.DONE: "DONE"}[k]


def parse_action(model_text: str, snapshot: Optional[ScreenSnapshot] = None) -> Action:
    """Return the first grammar production found in ``model_text``.

    When ``snapshot`` is given, CLICK indices are checked against its element
    count.
    """
    m = _GRAMMAR.search(model_text)
    if m is None:
        raise NoActionFound(f"no action in {model_text[:80]!r}")
    g = m.groups()
    kind = m.lastgroup
    if kind == "click_xy":
        return Action(ActionKind.CLICK_XY, (int(g[1]), int(g[2])))
    if kind == "click":
        index = int(g[4])
        if snapshot is not None and not 0 <= index < len(snapshot.elements):
            raise IndexOutOfRange(f"CLICK({index}) but screen has {len(snapshot.elements)} elements")
        if index < 0:
            raise IndexOutOfRange(f"negative index {index}")
        return Action.click(index)
    if kind == "type":
        return Action(ActionKind.TYPE_TEXT, _unquote(g[6]))
    if kind == "scroll":
        return Action(ActionKind.SCROLL, g[8].lower())
    if kind == "open_app":
        return Action(ActionKind.OPEN_APP, _unquote(g[10]))
    return {"back": Action.back(), "home": Action.home(), "done": Action.done()}[kind]


def format_elements(elements: Sequence[UiElement]) -> str:
    return "\n".join(f"[{e.index}] {element_text_repr(e)}" for e in elements)
