"""Deterministic simulated handset: screen graph, back stack, clock, interference."""

from __future__ import annotations

import logging
import random
import threading
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from ..core import Action, ActionKind, ScreenSnapshot, TaskGoal, UiElement
from .render import render
from .scenario import Scenario, Transition, confirm_screen_id

logger = logging.getLogger(__name__)


class InvalidAction(ValueError):
    pass


class UnknownPredicate(KeyError):
    pass


def to_ms(seconds: float) -> int:
    return int(round(seconds * 1000))


class VirtualClock:
    """Simulation time in integer milliseconds; advanced only by modeled latencies."""

    def __init__(self, start_ms: int = 0):
        self.now_ms = start_ms

    def now(self) -> float:
        return self.now_ms / 1000

    def advance(self, ms: int) -> int:
        if ms < 0:
            raise ValueError("clock cannot run backwards")
        self.now_ms += ms
        return self.now_ms

    def advance_to(self, ms: int) -> int:
        self.now_ms = max(self.now_ms, ms)
        return self.now_ms


@dataclass(frozen=True, eq=False)
class TransitionResult:
    snapshot_after: ScreenSnapshot
    elapsed: float
    interrupted: bool


VisibleKey = Tuple[str, Tuple[str, ...], bool]


class Environment:
    """Single-actor device. Callers coordinate through ``lock``; no internal locking."""

    def __init__(self, scenario: Scenario, seed: Optional[int] = None):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.rng = random.Random(self.seed)
        self.clock = VirtualClock()
        self.nav_stack: List[str] = [scenario.start_screen]
        if scenario.start_screen != scenario.home_screen:
            self.nav_stack.insert(0, scenario.home_screen)
        self.dialog_stack: List[str] = []
        self.flags: Dict[str, bool] = {}
        self.entered_text: Optional[str] = None
        self.done_issued = False
        self.banner = False
        self.lock = threading.Lock()
        self._pending = list(scenario.interrupts)
        self.actions_executed = 0
        self.snapshots_taken = 0
        lat = scenario.latencies
        self._action_ms = (to_ms(lat.action_min), to_ms(lat.action_max))
        self.snapshot_ms = to_ms(lat.snapshot)

    # --- observation ---------------------------------------------------

    @property
    def current_screen(self) -> str:
        return self.nav_stack[-1]

    @property
    def screen_id(self) -> str:
        """Visible state label used in golden traces."""
        return ">".join([self.current_screen, *self.dialog_stack])

    def _key(self) -> VisibleKey:
        return self.current_screen, tuple(self.dialog_stack), self.banner

    def _compose(self, key: VisibleKey):
        cache = self.scenario.render_cache
        if key not in cache:
            base, dialogs, banner = key
            layers = [self.scenario.screen(base)] + [self.scenario.screen(d) for d in dialogs]
            raster = render(layers, self.scenario.width, self.scenario.height, banner, self.scenario.dynamics.banner_height)
            elements, owners = [], []
            for depth, layer in enumerate(layers):
                active = depth == len(layers) - 1
                for e in layer.elements:
                    elements.append(
                        UiElement(
                            index=len(elements),
                            label=e.label,
                            description=e.description,
                            resource_id=e.resource_id,
                            bounds=e.bounds,
                            clickable=e.clickable and active,
                        )
                    )
                    owners.append((layer.id, e.id))
            cache[key] = (raster, tuple(elements), tuple(owners))
        return cache[key]

    def observe(self) -> ScreenSnapshot:
        """Render the visible state without charging capture latency (audits only)."""
        raster, elements, _ = self._compose(self._key())
        return ScreenSnapshot(raster, elements, self.clock.now())

    def snapshot(self) -> ScreenSnapshot:
        self.clock.advance(self.snapshot_ms)
        self.snapshots_taken += 1
        return self.observe()

    def reasoning_multiplier(self) -> float:
        return self.scenario.dynamics.multiplier_at(self.clock.now())

    # --- actions -------------------------------------------------------

    def _jump(self, target: str) -> None:
        home = self.scenario.home_screen
        if target in self.nav_stack:
            del self.nav_stack[len(self.nav_stack) - self.nav_stack[::-1].index(target):]
        else:
            self.nav_stack = [home] if target == home else [home, target]

    def _back(self) -> None:
        if self.dialog_stack:
            top = self.scenario.screen(self.dialog_stack.pop())
            if top.back_target:
                self.dialog_stack.clear()
                self._jump(top.back_target)
            return
        current = self.scenario.screen(self.current_screen)
        if current.back_target:
            self.nav_stack.pop()
            self._jump(current.back_target)
        elif len(self.nav_stack) > 1:
            self.nav_stack.pop()
        else:
            self.nav_stack = [self.scenario.home_screen]

    def _apply(self, t: Transition, confirmed: bool = False) -> None:
        if "confirm_dialog" in t.attributes and not confirmed:
            self.dialog_stack.append(confirm_screen_id(t))
            return
        for name, value in t.set_flags:
            self.flags[name] = value
        if "modal" in t.attributes:
            self.dialog_stack.append(t.target)
        elif t.target == self.current_screen and not self.dialog_stack:
            pass
        elif "irreversible" in t.attributes:
            self.nav_stack[-1] = t.target
        else:
            self.nav_stack.append(t.target)

    def _click(self, index: int) -> None:
        _, elements, owners = self._compose(self._key())
        if not 0 <= index < len(elements):
            raise InvalidAction(f"no element {index}")
        if not elements[index].clickable:
            raise InvalidAction(f"element {index} ({elements[index].name!r}) is not clickable")
        owner, element_id = owners[index]
        sc = self.scenario
        if self.dialog_stack:
            self.dialog_stack.pop()
            confirmed = sc.confirmed_transition(owner)
            if confirmed is not None:
                if element_id == "confirm":
                    self._apply(confirmed, confirmed=True)
                return
            t = sc.transition(owner, element_id)
            if t is not None:
                self._apply(t)
            return
        t = sc.transition(owner, element_id)
        if t is not None:
            self._apply(t)

    def execute(self, a: Action) -> TransitionResult:
        k = a.kind
        if k is ActionKind.CLICK_INDEX:
            self._click(a.payload)
        elif k is ActionKind.CLICK_XY:
            x, y = a.payload
            _, elements, _ = self._compose(self._key())
            hit = [e for e in elements if e.contains(x, y) and e.clickable]
            if hit:
                self._click(hit[-1].index)
        elif k is ActionKind.BACK:
            self._back()
        elif k is ActionKind.HOME:
            self.nav_stack = [self.scenario.home_screen]
            self.dialog_stack.clear()
        elif k is ActionKind.OPEN_APP:
            if a.payload not in self.scenario.apps:
                raise InvalidAction(f"unknown app {a.payload!r}")
            self.dialog_stack.clear()
            self._jump(self.scenario.home_screen)
            target = self.scenario.apps[a.payload]
            if target != self.scenario.home_screen:
                self.nav_stack.append(target)
        elif k is ActionKind.TYPE_TEXT:
            self.entered_text = a.payload
        elif k is ActionKind.DONE:
            self.done_issued = True
        # SCROLL: content offsets are not modeled

        elapsed = self.rng.randint(*self._action_ms)
        self.clock.advance(elapsed)
        self.actions_executed += 1
        if self.scenario.dynamics.banner_probability > 0:
            self.banner = self.rng.random() < self.scenario.dynamics.banner_probability
        interrupted = False
        while self._pending and to_ms(self._pending[0].at) <= self.clock.now_ms:
            event = self._pending.pop(0)
            self.dialog_stack.append(event.overlay_id)
            interrupted = True
            logger.debug("interrupt %s fired at %.3fs", event.kind, self.clock.now())
        return TransitionResult(self.observe(), elapsed / 1000, interrupted)

    # --- goals ---------------------------------------------------------

    def evaluate(self, predicate_id: str) -> bool:
        try:
            rule = self.scenario.goals[predicate_id]
        except KeyError:
            raise UnknownPredicate(predicate_id) from None
        if rule.screen is not None and self.current_screen != rule.screen:
            return False
        if any(self.flags.get(name, False) != value for name, value in rule.flags):
            return False
        if rule.text is not None and self.entered_text != rule.text:
            return False
        if rule.done is not None and self.done_issued != rule.done:
            return False
        return True

    def goal_reached(self, goal: TaskGoal) -> bool:
        return self.evaluate(goal.goal_predicate_id)
