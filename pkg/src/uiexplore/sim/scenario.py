"""Scenario documents: schema, validation and automatic element layout."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple, Union

import yaml

SCHEMA_VERSION = 1
DEFAULT_WIDTH = 240
DEFAULT_HEIGHT = 480
TITLE_HEIGHT = 32
ATTRIBUTES = frozenset({"modal", "irreversible", "confirm_dialog"})
INTERRUPT_KINDS = ("alarm", "message", "call", "app_notification")


class ScenarioError(ValueError):
    pass


class SchemaError(ScenarioError):
    pass


class DanglingReference(ScenarioError):
    pass


class InvalidProbability(ScenarioError):
    pass


@dataclass(frozen=True)
class ElementDef:
    id: str
    label: str = ""
    description: str = ""
    resource_id: str = ""
    bounds: Tuple[int, int, int, int] = (0, 0, 1, 1)
    clickable: bool = True


@dataclass(frozen=True)
class ScreenDef:
    id: str
    elements: Tuple[ElementDef, ...]
    back_target: Optional[str] = None
    overlay: bool = False

    def element(self, element_id: str) -> ElementDef:
        for e in self.elements:
            if e.id == element_id:
                return e
        raise KeyError(element_id)


@dataclass(frozen=True)
class Transition:
    screen: str
    element: str
    target: str
    attributes: FrozenSet[str] = frozenset()
    set_flags: Tuple[Tuple[str, bool], ...] = ()


@dataclass(frozen=True)
class Interrupt:
    at: float
    kind: str

    @property
    def overlay_id(self) -> str:
        return f"__interrupt_{self.kind}"


@dataclass(frozen=True)
class Latencies:
    action_min: float = 1.0
    action_max: float = 2.0
    snapshot: float = 0.2


@dataclass(frozen=True)
class Dynamics:
    banner_probability: float = 0.0
    banner_height: int = 12
    # piecewise-constant (start time s, multiplier) on reasoning latency
    reasoning_multipliers: Tuple[Tuple[float, float], ...] = ()

    def multiplier_at(self, t: float) -> float:
        m = 1.0
        for start, value in self.reasoning_multipliers:
            if t >= start:
                m = value
        return m


@dataclass(frozen=True)
class GoalRule:
    screen: Optional[str] = None
    flags: Tuple[Tuple[str, bool], ...] = ()
    text: Optional[str] = None
    done: Optional[bool] = None
    instruction: str = ""


@dataclass(frozen=True)
class Scenario:
    name: str
    screens: Mapping[str, ScreenDef]
    start_screen: str
    home_screen: str
    transitions: Tuple[Transition, ...] = ()
    interrupts: Tuple[Interrupt, ...] = ()
    latencies: Latencies = Latencies()
    dynamics: Dynamics = Dynamics()
    goals: Mapping[str, GoalRule] = field(default_factory=dict)
    apps: Mapping[str, str] = field(default_factory=dict)
    seed: int = 0
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT

    def __post_init__(self):
        object.__setattr__(self, "_by_edge", {(t.screen, t.element): t for t in self.transitions})
        # rendered rasters/element lists keyed by visible state; shared by all environments
        object.__setattr__(self, "render_cache", {})
        object.__setattr__(
            self, "_confirm", {confirm_screen_id(t): t for t in self.transitions if "confirm_dialog" in t.attributes}
        )

    def confirmed_transition(self, overlay_id: str) -> Optional[Transition]:
        return self._confirm.get(overlay_id)

    def transition(self, screen: str, element: str) -> Optional[Transition]:
        return self._by_edge.get((screen, element))

    def screen(self, screen_id: str) -> ScreenDef:
        return self.screens[screen_id]


# --- layout ----------------------------------------------------------------

def _h(*parts) -> int:
    text = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")


def auto_layout(screen_id: str, n: int, width: int, height: int, overlay: bool = False) -> List[Tuple[int, int, int, int]]:
    """Deterministic per-screen layout so unrelated screens look structurally different."""
    if n == 0:
        return []
    if overlay:
        row_h, gap = 36, 8
        box_h = n * (row_h + gap) + gap
        y = max(TITLE_HEIGHT, (height - box_h) // 2) + gap
        x0, x1 = 28, width - 28
        out = []
        for k in range(n):
            out.append((x0 + 8, y, x1 - 8, y + row_h))
            y += row_h + gap
        return out
    style = _h("style", screen_id)
    cols = 1 if n <= 8 else 2 if n <= 20 else 4
    rows = -(-n // cols)
    top = TITLE_HEIGHT + (8, 16, 28, 44)[style % 4]
    margin = (4, 10, 18)[(style >> 3) % 3]
    avail = height - top - 4
    pitch = min(avail // rows, (48, 56, 64, 72)[(style >> 6) % 4])
    cell_h = max(4, pitch - (2 + (style >> 9) % 6))
    col_w = (width - 2 * margin) // cols
    out = []
    for k in range(n):
        r, c = divmod(k, cols)
        frac = 0.45 + 0.55 * ((_h("w", screen_id, k) % 1000) / 999)
        w = max(6, int(col_w * frac) - 2)
        x0 = margin + c * col_w
        y0 = top + r * pitch
        out.append((x0, y0, x0 + w, y0 + cell_h))
    return out


# --- loading ---------------------------------------------------------------

def _req(doc: Mapping, key: str, where: str):
    if key not in doc:
        raise SchemaError(f"{where}: missing required key {key!r}")
    return doc[key]


def _prob(value, where: str) -> float:
    try:
        p = float(value)
    except (TypeError, ValueError):
        raise SchemaError(f"{where}: not a number: {value!r}")
    if not 0.0 <= p <= 1.0:
        raise InvalidProbability(f"{where}: {p} not in [0, 1]")
    return p


def _flags(raw, where: str) -> Tuple[Tuple[str, bool], ...]:
    if raw is None:
        return ()
    if not isinstance(raw, Mapping):
        raise SchemaError(f"{where}: flags must be a mapping")
    return tuple(sorted((str(k), bool(v)) for k, v in raw.items()))


def _screen(sid: str, raw: Mapping, width: int, height: int) -> ScreenDef:
    if not isinstance(raw, Mapping):
        raise SchemaError(f"screen {sid}: must be a mapping")
    overlay = bool(raw.get("overlay", False))
    raw_elems = raw.get("elements") or []
    if not isinstance(raw_elems, list):
        raise SchemaError(f"screen {sid}: elements must be a list")
    auto = auto_layout(str(raw.get("layout_seed", sid)), len(raw_elems), width, height, overlay)
    elements, ids = [], set()
    for k, e in enumerate(raw_elems):
        if not isinstance(e, Mapping):
            raise SchemaError(f"screen {sid}: element {k} must be a mapping")
        eid = str(e.get("id", f"e{k}"))
        if eid in ids:
            raise SchemaError(f"screen {sid}: duplicate element id {eid!r}")
        ids.add(eid)
        bounds = tuple(int(v) for v in e["bounds"]) if "bounds" in e else auto[k]
        if len(bounds) != 4:
            raise SchemaError(f"screen {sid}/{eid}: bounds need 4 integers")
        x0, y0, x1, y1 = bounds
        if not (0 <= x0 < x1 <= width and 0 <= y0 < y1 <= height):
            raise SchemaError(f"screen {sid}/{eid}: bounds {bounds} outside {width}x{height}")
        el = ElementDef(
            id=eid,
            label=str(e.get("label", "") or ""),
            description=str(e.get("description", "") or ""),
            resource_id=str(e.get("resource_id", "") or ""),
            bounds=bounds,
            clickable=bool(e.get("clickable", True)),
        )
        if el.clickable and not (el.label or el.description or el.resource_id):
            raise SchemaError(f"screen {sid}/{eid}: clickable element has no text")
        elements.append(el)
    back = raw.get("back_target")
    return ScreenDef(id=sid, elements=tuple(elements), back_target=str(back) if back else None, overlay=overlay)


def interrupt_screen(kind: str, width: int, height: int) -> ScreenDef:
    labels = {
        "alarm": ("Alarm", "Dismiss", "Snooze"),
        "message": ("New message", "Reply", "Dismiss"),
        "call": ("Incoming call", "Answer", "Decline"),
        "app_notification": ("Notification", "Open", "Dismiss"),
    }[kind]
    sid = f"__interrupt_{kind}"
    raw = {
        "overlay": True,
        "elements": [{"id": "title", "label": labels[0], "resource_id": "system:id/interrupt_title", "clickable": False}]
        + [{"id": f"b{i}", "label": lab, "resource_id": f"system:id/interrupt_{lab.lower()}"} for i, lab in enumerate(labels[1:])],
    }
    return _screen(sid, raw, width, height)


def confirm_screen_id(t: Transition) -> str:
    return f"__confirm__{t.screen}__{t.element}"


def confirm_screen(t: Transition, width: int, height: int) -> ScreenDef:
    raw = {
        "overlay": True,
        "elements": [
            {"id": "message", "label": "Are you sure?", "resource_id": "system:id/confirm_message", "clickable": False},
            {"id": "confirm", "label": "Confirm", "resource_id": "system:id/confirm_ok"},
            {"id": "cancel", "label": "Cancel", "resource_id": "system:id/confirm_cancel"},
        ],
    }
    return _screen(confirm_screen_id(t), raw, width, height)


def scenario_from_dict(doc: Mapping) -> Scenario:
    if not isinstance(doc, Mapping):
        raise SchemaError("scenario document must be a mapping")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {doc.get('schema_version')!r}")
    size = doc.get("screen_size") or {}
    width = int(size.get("width", DEFAULT_WIDTH))
    height = int(size.get("height", DEFAULT_HEIGHT))

    raw_screens = _req(doc, "screens", "scenario")
    if not isinstance(raw_screens, Mapping) or not raw_screens:
        raise SchemaError("scenario: screens must be a nonempty mapping")
    screens: Dict[str, ScreenDef] = {str(k): _screen(str(k), v or {}, width, height) for k, v in raw_screens.items()}

    start = str(_req(doc, "start_screen", "scenario"))
    home = str(_req(doc, "home_screen", "scenario"))
    for role, sid in (("start_screen", start), ("home_screen", home)):
        if sid not in screens:
            raise DanglingReference(f"{role} {sid!r} is not a screen")
    for s in screens.values():
        if s.back_target and s.back_target not in screens:
            raise DanglingReference(f"screen {s.id}: back_target {s.back_target!r} is not a screen")

    transitions = []
    for k, t in enumerate(doc.get("transitions") or []):
        where = f"transition {k}"
        src, el, dst = (str(_req(t, key, where)) for key in ("screen", "element", "target"))
        if src not in screens:
            raise DanglingReference(f"{where}: screen {src!r} does not exist")
        try:
            screens[src].element(el)
        except KeyError:
            raise DanglingReference(f"{where}: element {el!r} not on screen {src!r}")
        if dst not in screens:
            raise DanglingReference(f"{where}: target {dst!r} does not exist")
        attrs = frozenset(t.get("attributes") or ())
        if not attrs <= ATTRIBUTES:
            raise SchemaError(f"{where}: unknown attributes {sorted(attrs - ATTRIBUTES)}")
        transitions.append(Transition(src, el, dst, attrs, _flags(t.get("set_flags"), where)))

    interrupts = []
    for k, i in enumerate(doc.get("interrupts") or []):
        kind = str(_req(i, "kind", f"interrupt {k}"))
        if kind not in INTERRUPT_KINDS:
            raise SchemaError(f"interrupt {k}: unknown kind {kind!r}")
        interrupts.append(Interrupt(float(_req(i, "at_s", f"interrupt {k}")), kind))
    interrupts.sort(key=lambda i: i.at)

    lat = doc.get("latencies") or {}
    latencies = Latencies(
        action_min=float(lat.get("action_min_s", 1.0)),
        action_max=float(lat.get("action_max_s", 2.0)),
        snapshot=float(lat.get("snapshot_s", 0.2)),
    )
    if not 0 < latencies.action_min <= latencies.action_max or latencies.snapshot < 0:
        raise SchemaError("latencies: need 0 < action_min_s <= action_max_s and snapshot_s >= 0")

    dyn = doc.get("dynamics") or {}
    dynamics = Dynamics(
        banner_probability=_prob(dyn.get("banner_probability", 0.0), "dynamics.banner_probability"),
        banner_height=int(dyn.get("banner_height", 12)),
        reasoning_multipliers=tuple(
            sorted((float(a), float(b)) for a, b in (dyn.get("reasoning_multipliers") or []))
        ),
    )
    if any(m <= 0 for _, m in dynamics.reasoning_multipliers):
        raise SchemaError("dynamics.reasoning_multipliers must be positive")

    goals = {}
    for gid, g in (doc.get("goals") or {}).items():
        g = g or {}
        rule = GoalRule(
            screen=str(g["screen"]) if g.get("screen") is not None else None,
            flags=_flags(g.get("flags"), f"goal {gid}"),
            text=str(g["text"]) if g.get("text") is not None else None,
            done=bool(g["done"]) if g.get("done") is not None else None,
            instruction=str(g.get("instruction") or ""),
        )
        if rule.screen is not None and rule.screen not in screens:
            raise DanglingReference(f"goal {gid}: screen {rule.screen!r} does not exist")
        goals[str(gid)] = rule

    apps = {str(k): str(v) for k, v in (doc.get("apps") or {}).items()}
    for name, sid in apps.items():
        if sid not in screens:
            raise DanglingReference(f"app {name!r}: screen {sid!r} does not exist")

    for t in transitions:
        if "confirm_dialog" in t.attributes:
            screens[confirm_screen_id(t)] = confirm_screen(t, width, height)
    for kind in INTERRUPT_KINDS:
        screens[f"__interrupt_{kind}"] = interrupt_screen(kind, width, height)

    return Scenario(
        name=str(doc.get("name", "scenario")),
        screens=screens,
        start_screen=start,
        home_screen=home,
        transitions=tuple(transitions),
        interrupts=tuple(interrupts),
        latencies=latencies,
        dynamics=dynamics,
        goals=goals,
        apps=apps,
        seed=int(doc.get("seed", 0)),
        width=width,
        height=height,
    )


def load_scenario(document: Union[str, Path, Mapping]) -> Scenario:
    """Load from a mapping, a YAML string, or a path to a YAML file."""
    if isinstance(document, Mapping):
        return scenario_from_dict(document)
    if isinstance(document, Path) or (isinstance(document, str) and "\n" not in document and document.endswith((".scn", ".yaml", ".yml"))):
        document = Path(document).read_text()
    try:
        doc = yaml.safe_load(document)
    except yaml.YAMLError as exc:
        raise SchemaError(f"malformed scenario document: {exc}") from exc
    return scenario_from_dict(doc)
