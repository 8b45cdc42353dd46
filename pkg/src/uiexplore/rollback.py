"""Two-level state restoration after an exploration probe.

Level 1 presses Back a bounded number of times, checking the screenshot hash
after every press. Level 2 goes Home and replays the main-trajectory trace.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, replace
from typing import Optional

from .core import Action, ActionKind, InteractionTrace, ScreenSnapshot, TraceEntry, element_text_repr
from .phash import DEFAULT_TAU, Hash64, hamming, phash

logger = logging.getLogger(__name__)

DEFAULT_SLACK = 1


class RollbackLevel(enum.Enum):
    LEVEL1 = "Level1"
    LEVEL2 = "Level2"
    FAILED = "Failed"


class ReplayActionInvalid(RuntimeError):
    pass


@dataclass(frozen=True)
class RollbackOutcome:
    level: RollbackLevel
    back_presses: int
    replay_length: int
    final_distance: int
    elapsed: float
    note: str = ""

    def log_line(self) -> str:
        return f"rollback\t{self.level.value}\t{self.back_presses}\t{self.replay_length}\t{self.final_distance}"


class RestorationFailed(RuntimeError):
    def __init__(self, outcome: RollbackOutcome, context=None):
        super().__init__(f"could not restore exploration start state ({outcome.note or 'distance ' + str(outcome.final_distance)})")
        self.outcome = outcome
        self.context = context


def verify_restored(current: ScreenSnapshot, h0: Hash64, tau: int = DEFAULT_TAU) -> bool:
    if not 0 <= tau <= 64:
        raise ValueError("tau must be in [0, 64]")
    return hamming(phash(current.raster), h0) <= tau


def backtrack_level1(
    env,
    depth_taken: int,
    h0: Hash64,
    tau: int = DEFAULT_TAU,
    slack: int = DEFAULT_SLACK,
    current: Optional[ScreenSnapshot] = None,
) -> RollbackOutcome:
    """Press Back up to ``depth_taken + slack`` times until the start hash is seen.

    ``current`` may carry a screenshot already taken at the probe's end, saving
    one capture. A Failed outcome here is a level-1 miss for ``rollback``.
    """
    t0 = env.clock.now_ms
    snap = current if current is not None else env.snapshot()
    distance = hamming(phash(snap.raster), h0)
    presses = 0
    while distance > tau and presses < depth_taken + slack:
        env.execute(Action.back())
        presses += 1
        distance = hamming(phash(env.snapshot().raster), h0)
    level = RollbackLevel.LEVEL1 if distance <= tau else RollbackLevel.FAILED
    return RollbackOutcome(level, presses, 0, distance, (env.clock.now_ms - t0) / 1000)


def _replay_one(env, entry: TraceEntry) -> None:
    from .sim.environment import InvalidAction

    action = entry.action
    if action.kind is ActionKind.CLICK_INDEX and entry.target_repr:
        elements = env.snapshot().elements
        match = [e for e in elements if e.clickable and element_text_repr(e) == entry.target_repr]
        if not match:
            raise ReplayActionInvalid(f"step {entry.step}: element {entry.target_repr!r} is gone")
        action = Action.click(match[0].index)
    try:
        env.execute(action)
    except InvalidAction as exc:
        raise ReplayActionInvalid(f"step {entry.step}: {exc}") from exc


def home_and_replay(env, trace: InteractionTrace, h0: Hash64, tau: int = DEFAULT_TAU) -> RollbackOutcome:
    for entry in trace:
        # probes are never logged with a step index; only main-trajectory actions belong here
        if not isinstance(entry, TraceEntry) or entry.step < 1:
            raise ValueError("replay trace may only hold main-trajectory entries")
    t0 = env.clock.now_ms
    env.execute(Action.home())
    note = ""
    try:
        for entry in trace:
            _replay_one(env, entry)
    except ReplayActionInvalid as exc:
        note = f"ReplayActionInvalid: {exc}"
        logger.info("level-2 replay aborted: %s", exc)
    distance = hamming(phash(env.snapshot().raster), h0)
    level = RollbackLevel.LEVEL2 if not note and distance <= tau else RollbackLevel.FAILED
    return RollbackOutcome(level, 0, len(trace), distance, (env.clock.now_ms - t0) / 1000, note)


def rollback(
    env,
    depth_taken: int,
    h0: Hash64,
    tau: int,
    trace: InteractionTrace,
    slack: int = DEFAULT_SLACK,
    current: Optional[ScreenSnapshot] = None,
) -> RollbackOutcome:
    first = backtrack_level1(env, depth_taken, h0, tau, slack, current)
    if first.level is RollbackLevel.LEVEL1:
        return first
    second = home_and_replay(env, trace, h0, tau)
    return replace(second, back_presses=first.back_presses, elapsed=first.elapsed + second.elapsed)
