"""Budgeted, depth-bounded probing of relevance-ranked elements."""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from typing import List, MutableSet, Optional

from .core import REPR_SEPARATOR, Action, InteractionTrace, ScreenSnapshot, TaskGoal, UiElement, element_text_repr
from .phash import DEFAULT_TAU, Hash64, hamming, phash
from .relevance import DEFAULT_LAMBDA, Embedder, HistoryKey, rank_candidates
from .rollback import DEFAULT_SLACK, RestorationFailed, RollbackLevel, RollbackOutcome, rollback

logger = logging.getLogger(__name__)

DEFAULT_MAX_DEPTH = 1
DEFAULT_MAX_PROBES = 3


@dataclass(frozen=True)
class ExplorationBudget:
    time_budget: float
    max_depth: int = DEFAULT_MAX_DEPTH
    max_probes: int = DEFAULT_MAX_PROBES

    def __post_init__(self):
        if self.time_budget <= 0:
            raise ValueError("time_budget must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.max_probes < 0:
            raise ValueError("max_probes must be >= 0")


@dataclass(frozen=True, eq=False)
class ObservationRecord:
    screen_hash: Hash64
    elements: tuple
    via_element: str
    probe_depth: int
    recorded_at: float

    @property
    def via_label(self) -> str:
        # the repr's first field is the element's display name
        return self.via_element.split(REPR_SEPARATOR)[0]


@dataclass
class ExplorationContext:
    observations: List[ObservationRecord] = field(default_factory=list)
    probes_attempted: int = 0
    rollback_outcomes: List[RollbackOutcome] = field(default_factory=list)
    log: List[str] = field(default_factory=list)
    elapsed: float = 0.0
    cancelled: bool = False


class CancelSignal:
    """Set-once flag polled by exploration between probes and rollback steps."""

    def __init__(self):
        self._event = threading.Event()

    def set(self) -> None:
        self._event.set()

    def is_set(self) -> bool:
        return self._event.is_set()


def collect_clickables(s: ScreenSnapshot) -> List[UiElement]:
    return [e for e in s.elements if e.clickable]


def _probe_chain(env, first: UiElement, start_hash: Hash64, goal, budget, history, ctx, lam, tau, embedder):
    """Click ``first`` and follow top-1 candidates down to ``max_depth``.

    Returns (depth actually taken, last snapshot).
    """
    from .sim.environment import InvalidAction

    element, screen_hash = first, start_hash
    depth, snap = 0, None
    while True:
        text = element_text_repr(element)
        try:
            env.execute(Action.click(element.index))
        except InvalidAction as exc:
            logger.info("probe of %r rejected: %s", text, exc)
            break
        history.add(HistoryKey(screen_hash, text))
        depth += 1
        snap = env.snapshot()
        h = phash(snap.raster)
        if hamming(h, screen_hash) > tau:
            ctx.observations.append(ObservationRecord(h, snap.elements, text, depth, env.clock.now()))
        ctx.log.append(f"probe\t{text}\t{depth}\t{h.hex()}")
        if depth >= budget.max_depth:
            break
        ranked = rank_candidates(collect_clickables(snap), goal, history, h, lam, tau, embedder)
        if not ranked:
            break
        element, screen_hash = ranked[0][0], h
    return depth, snap


def explore(
    env,
    start: ScreenSnapshot,
    goal: TaskGoal,
    budget: ExplorationBudget,
    history: MutableSet[HistoryKey],
    trace: InteractionTrace,
    cancel: Optional[CancelSignal] = None,
    lam: float = DEFAULT_LAMBDA,
    tau: int = DEFAULT_TAU,
    slack: int = DEFAULT_SLACK,
    embedder: Optional[Embedder] = None,
) -> ExplorationContext:
    """Probe ranked candidates from ``start`` and restore it after each probe.

    The caller must hold ``env.lock``. Raises RestorationFailed (carrying the
    partial context) if neither rollback level recovers the start screen.
    """
    if not env.lock.locked():
        raise RuntimeError("explore() requires the environment lock")
    t0 = env.clock.now_ms
    budget_ms = round(budget.time_budget * 1000)
    h0 = phash(start.raster)
    ctx = ExplorationContext()
    candidates = rank_candidates(collect_clickables(start), goal, history, h0, lam, tau, embedder)
    probed = set()
    for element, _score in candidates:
        if cancel is not None and cancel.is_set():
            ctx.cancelled = True
            break
        if env.clock.now_ms - t0 >= budget_ms or ctx.probes_attempted >= budget.max_probes:
            break
        key = HistoryKey(h0, element_text_repr(element))
        if key in probed:
            continue  # twin element with the same repr on this screen
        probed.add(key)
        depth, snap = _probe_chain(env, element, h0, goal, budget, history, ctx, lam, tau, embedder)
        if depth == 0:
            break
        ctx.probes_attempted += 1
        outcome = rollback(env, depth, h0, tau, trace, slack, current=snap)
        ctx.rollback_outcomes.append(outcome)
        ctx.log[-1] += f"\t{outcome.level.value}"
        ctx.log.append(outcome.log_line())
        if outcome.level is RollbackLevel.FAILED:
            ctx.elapsed = (env.clock.now_ms - t0) / 1000
            raise RestorationFailed(outcome, ctx)
    ctx.elapsed = (env.clock.now_ms - t0) / 1000
    return ctx
