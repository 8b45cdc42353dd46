"""Per-step loop: capture, reason and explore concurrently, then act."""

from __future__ import annotations

import enum
import logging
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

from .core import Action, ActionKind, InteractionTrace, ScreenSnapshot, TaskGoal, UiElement, element_text_repr, format_elements
from .core import ActionParseError
from .explorer import CancelSignal, ExplorationBudget, ObservationRecord, explore
from .hints import HINT_HEADER, PromptBundle, align_observations, augment_prompt, hinted_labels, render_hints, select_elements
from .phash import hamming, phash
from .reasoner import Reasoner, ReasonerUnavailable, estimate_budget
from .rollback import RestorationFailed
from .sim.environment import Environment, InvalidAction, to_ms

logger = logging.getLogger(__name__)


class Termination(enum.Enum):
    GOAL_REACHED = "GoalReached"
    MAX_STEPS = "MaxSteps"
    WALL_BUDGET = "WallBudget"
    REASONER_FAILURE = "ReasonerFailure"
    AGENT_STOPPED = "AgentStopped"  # DONE issued while the goal predicate is false


@dataclass(frozen=True)
class PipelineConfig:
    exploration_enabled: bool = True
    max_depth: int = 1
    max_probes: int = 3
    lam: float = 1.0
    tau: int = 8
    delta: int = 10
    k_max: int = 3
    char_budget: int = 400
    margin: float = 0.2
    floor_s: float = 5.0
    seed: Optional[int] = None
    slack: int = 1

    KEYS = {
        "exploration.enabled": "exploration_enabled",
        "exploration.max_depth": "max_depth",
        "exploration.max_probes": "max_probes",
        "exploration.lambda": "lam",
        "phash.tau": "tau",
        "hints.delta": "delta",
        "hints.k_max": "k_max",
        "hints.char_budget": "char_budget",
        "budget.margin": "margin",
        "budget.floor_s": "floor_s",
        "seed": "seed",
    }

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "PipelineConfig":
        kwargs = {}
        for key, value in values.items():
            if key not in cls.KEYS:
                raise KeyError(f"unknown config key {key!r}")
            kwargs[cls.KEYS[key]] = value
        return cls(**kwargs)

    def to_mapping(self) -> Dict[str, Any]:
        return {key: getattr(self, attr) for key, attr in self.KEYS.items()}


@dataclass(frozen=True)
class StepRecord:
    step_index: int
    reason_latency: float
    explore_latency: float
    action_latency: float
    step_latency: float
    snapshot_latency: float
    probes: int
    rollback_levels: Tuple[str, ...]
    hint_followed: bool
    action: Action
    same_screen: bool
    hint_block: str = ""
    executed: bool = True
    recovered: bool = False  # a failed rollback forced a fresh capture this step


@dataclass(frozen=True)
class TaskReport:
    goal: TaskGoal
    success: bool
    steps: int
    end_to_end_latency: float
    step_records: Tuple[StepRecord, ...]
    termination: Termination
    reasoner_calls: int
    trace: Tuple = ()
    error: str = ""


class ReasonerDone:
    """Cancel signal raised once the reasoner's (virtual) latency has elapsed.

    In simulation the reasoner's duration lives on the virtual clock, so the
    signal blocks for the host-side result and then compares the clock against
    the step's reasoning deadline. That keeps the schedule deterministic.
    """

    def __init__(self, future: Future, env: Environment, started_ms: int, multiplier: float):
        self._future = future
        self._env = env
        self._started_ms = started_ms
        self._multiplier = multiplier
        self._forced = CancelSignal()

    def set(self) -> None:
        self._forced.set()

    def deadline_ms(self) -> Optional[int]:
        try:
            out = self._future.result()
        except Exception:
            return None
        return self._started_ms + to_ms(out.reported_latency * self._multiplier)

    def is_set(self) -> bool:
        if self._forced.is_set():
            return True
        deadline = self.deadline_ms()
        return deadline is None or self._env.clock.now_ms >= deadline


def _history_line(step: int, action: Action, target: Optional[UiElement]) -> str:
    line = f"{step}. {action}"
    if target is not None:
        line += f' -> "{target.name}"'
    return line


def build_bundle(goal: TaskGoal, snapshot: ScreenSnapshot, history_lines: List[str]) -> PromptBundle:
    task = [f"Task: {goal.instruction}", "Screen elements:", format_elements(snapshot.elements)]
    if history_lines:
        task += ["Previous actions:", *history_lines]
    from .reasoner import SYSTEM_PROMPT

    return PromptBundle(SYSTEM_PROMPT, "\n".join(task), "", snapshot.raster)


def _click_target(action: Action, snapshot: ScreenSnapshot) -> Optional[UiElement]:
    if action.kind is ActionKind.CLICK_INDEX:
        if 0 <= action.payload < len(snapshot.elements):
            return snapshot.elements[action.payload]
        return None
    if action.kind is ActionKind.CLICK_XY:
        hits = [e for e in snapshot.elements if e.clickable and e.contains(*action.payload)]
        return hits[-1] if hits else None
    return None


def _merge(store: List[ObservationRecord], new: List[ObservationRecord]) -> None:
    for record in new:
        store[:] = [o for o in store if o.screen_hash != record.screen_hash]
        store.append(record)


def run_task(
    env: Environment,
    goal: TaskGoal,
    config: PipelineConfig,
    reasoner: Reasoner,
    on_step: Optional[Callable[[Environment, StepRecord], None]] = None,
) -> TaskReport:
    trace = InteractionTrace()
    store: List[ObservationRecord] = []
    history: set = set()
    latencies: List[float] = []
    records: List[StepRecord] = []
    history_lines: List[str] = []
    calls = 0
    t_task = env.clock.now_ms
    termination = None
    error = ""
    hint_room = config.char_budget - len(HINT_HEADER) - 1
    executor = ThreadPoolExecutor(max_workers=1, thread_name_prefix="reasoner")
    try:
        while termination is None:
            step = len(records) + 1
            t0 = env.clock.now_ms
            snap = env.snapshot()
            t1 = env.clock.now_ms
            h = phash(snap.raster)

            matched = align_observations(store, h, config.delta)
            selected = select_elements(matched, goal, config.k_max)
            bundle = augment_prompt(build_bundle(goal, snap, history_lines), render_hints(selected, hint_room), config.char_budget)

            multiplier = env.reasoning_multiplier()
            future = executor.submit(reasoner.decide, bundle, snap, step)
            calls += 1
            signal = ReasonerDone(future, env, t1, multiplier)

            ctx, recovered = None, False
            if config.exploration_enabled:
                budget = ExplorationBudget(estimate_budget(latencies, config.margin, config.floor_s), config.max_depth, config.max_probes)
                with env.lock:
                    try:
                        ctx = explore(env, snap, goal, budget, history, trace, signal, config.lam, config.tau, config.slack)
                    except RestorationFailed as exc:
                        ctx, recovered = exc.context, True
                        logger.warning("step %d: %s; continuing from a fresh capture", step, exc)
            explore_ms = env.clock.now_ms - t1

            try:
                out = future.result()
            except (ReasonerUnavailable, ActionParseError) as exc:
                termination, error = Termination.REASONER_FAILURE, str(exc)
                break
            reason_ms = to_ms(out.reported_latency * multiplier)
            latencies.append(reason_ms / 1000)
            env.clock.advance_to(t1 + reason_ms)

            action = out.decided_action
            # a failed rollback leaves the device somewhere unknown: look again before acting
            current = env.snapshot() if recovered else env.observe()
            same = hamming(phash(current.raster), h) <= config.tau
            target = _click_target(action, snap)

            ta = env.clock.now_ms
            executed = False
            if same:
                try:
                    result = env.execute(action)
                    trace.append(step, action, phash(result.snapshot_after.raster), element_text_repr(target) if target is not None else "")
                    executed = True
                except InvalidAction as exc:
                    logger.info("step %d: %s rejected: %s", step, action, exc)
            else:
                logger.warning("step %d: screen changed under the reasoner; %s skipped", step, action)
            action_ms = env.clock.now_ms - ta
            if ctx is not None:
                _merge(store, ctx.observations)

            followed = executed and target is not None and target.name in hinted_labels(bundle.hint_block)
            record = StepRecord(
                step_index=step,
                reason_latency=reason_ms / 1000,
                explore_latency=explore_ms / 1000,
                action_latency=action_ms / 1000,
                step_latency=(env.clock.now_ms - t0) / 1000,
                snapshot_latency=(t1 - t0) / 1000,
                probes=ctx.probes_attempted if ctx else 0,
                rollback_levels=tuple(o.level.value for o in ctx.rollback_outcomes) if ctx else (),
                hint_followed=followed,
                action=action,
                same_screen=same,
                executed=executed,
                hint_block=bundle.hint_block,
                recovered=recovered,
            )
            records.append(record)
            history_lines.append(_history_line(step, record.action, target))
            if on_step is not None:
                on_step(env, record)

            if env.goal_reached(goal):
                termination = Termination.GOAL_REACHED
            elif record.action.kind is ActionKind.DONE:
                termination = Termination.AGENT_STOPPED
            elif step >= goal.max_steps:
                termination = Termination.MAX_STEPS
            elif (env.clock.now_ms - t_task) / 1000 >= goal.wall_budget:
                termination = Termination.WALL_BUDGET
    finally:
        executor.shutdown(wait=True)

    return TaskReport(
        goal=goal,
        success=termination is Termination.GOAL_REACHED,
        steps=len(records),
        end_to_end_latency=sum(r.step_latency for r in records),
        step_records=tuple(records),
        termination=termination,
        reasoner_calls=calls,
        trace=tuple(trace),
        error=error,
    )


def run_mode_comparison(
    env_factory: Callable[[], Environment],
    goal: TaskGoal,
    config: PipelineConfig,
    reasoner_factory: Callable[[], Reasoner],
) -> Tuple[TaskReport, TaskReport]:
    sequential = run_task(env_factory(), goal, replace(config, exploration_enabled=False), reasoner_factory())
    explored = run_task(env_factory(), goal, replace(config, exploration_enabled=True), reasoner_factory())
    return sequential, explored
