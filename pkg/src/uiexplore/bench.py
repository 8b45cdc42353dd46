"""Suite runner and report formatting."""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import yaml

from .core import TaskGoal
from .pipeline import PipelineConfig, TaskReport, run_task
from .reasoner import ScriptedReasoner, load_oracle
from .sim.environment import Environment
from .sim.scenario import load_scenario

logger = logging.getLogger(__name__)

MODES = ("sequential", "explore")
DIFFICULTIES = ("easy", "medium", "hard")
SEED_ENV = "EXPLORER_SEED"


class SuiteError(ValueError):
    pass


@dataclass(frozen=True)
class SuiteEntry:
    scenario: Path
    goal: str
    difficulty: str
    oracle: Optional[Path] = None
    instruction: str = ""
    max_steps: Optional[int] = None


@dataclass(frozen=True)
class SuiteSpec:
    entries: Tuple[SuiteEntry, ...]
    repeats: int = 1
    seeds: Tuple[int, ...] = (1,)
    max_steps: int = 25
    name: str = "suite"

    def __post_init__(self):
        if not self.entries:
            raise SuiteError("a suite needs at least one entry")
        if self.repeats < 1 or not self.seeds:
            raise SuiteError("a suite needs repeats >= 1 and at least one seed")
        for e in self.entries:
            if e.difficulty not in DIFFICULTIES:
                raise SuiteError(f"unknown difficulty {e.difficulty!r}")

    def proportions(self) -> Dict[str, float]:
        n = len(self.entries)
        return {d: sum(e.difficulty == d for e in self.entries) / n for d in DIFFICULTIES}


def load_suite(path: Union[str, Path]) -> SuiteSpec:
    path = Path(path)
    doc = yaml.safe_load(path.read_text())
    if not isinstance(doc, Mapping) or doc.get("schema_version") != 1:
        raise SuiteError(f"{path}: unsupported suite document")
    entries = []
    for raw in doc.get("entries") or []:
        scenario = path.parent / raw["scenario"]
        oracle = raw.get("oracle")
        entries.append(
            SuiteEntry(
                scenario=scenario,
                goal=str(raw["goal"]),
                difficulty=str(raw.get("difficulty", "easy")),
                oracle=path.parent / oracle if oracle else scenario.with_suffix(".oracle"),
                instruction=str(raw.get("instruction", "")),
                max_steps=raw.get("max_steps"),
            )
        )
    return SuiteSpec(
        entries=tuple(entries),
        repeats=int(doc.get("repeats", 1)),
        seeds=tuple(int(s) for s in doc.get("seeds") or [1]),
        max_steps=int(doc.get("max_steps", 25)),
        name=str(doc.get("name", path.stem)),
    )


@dataclass(frozen=True)
class TaskRow:
    scenario: str
    goal: str
    difficulty: str
    seed: int
    repeat: int
    mode: str
    success: bool
    termination: str
    steps: int
    end_to_end: float
    reason_total: float
    explore_total: float
    reasoner_calls: int
    probes: int
    rollback_level1: int
    rollback_level2: int
    rollback_failed: int
    hint_follows: int
    same_screen_steps: int
    max_rule_steps: int  # steps whose latency matches the overlap rule exactly


@dataclass(frozen=True)
class Aggregate:
    tasks: int
    success_rate: float
    mean_steps: float
    mean_step_latency: float
    mean_end_to_end: float
    level1_ratio: float
    level2_ratio: float
    failed_ratio: float
    hint_follow_rate: float


@dataclass(frozen=True)
class SuiteReport:
    name: str
    modes: Tuple[str, ...]
    rows: Tuple[TaskRow, ...]
    aggregates: Mapping[str, Aggregate]
    by_difficulty: Mapping[str, Mapping[str, Aggregate]]
    proportions: Mapping[str, float]


def _max_rule_holds(r, enabled: bool) -> bool:
    overlap = max(r.reason_latency, r.explore_latency) if enabled else r.reason_latency
    expected = r.snapshot_latency + overlap + r.action_latency
    return abs(r.step_latency - expected) < 1e-6 or r.recovered


def task_row(entry: SuiteEntry, seed: int, repeat: int, mode: str, report: TaskReport) -> TaskRow:
    recs = report.step_records
    levels = [lv for r in recs for lv in r.rollback_levels]
    return TaskRow(
        scenario=entry.scenario.stem,
        goal=entry.goal,
        difficulty=entry.difficulty,
        seed=seed,
        repeat=repeat,
        mode=mode,
        success=report.success,
        termination=report.termination.value if report.termination else "Error",
        steps=report.steps,
        end_to_end=round(report.end_to_end_latency, 6),
        reason_total=round(sum(r.reason_latency for r in recs), 6),
        explore_total=round(sum(r.explore_latency for r in recs), 6),
        reasoner_calls=report.reasoner_calls,
        probes=sum(r.probes for r in recs),
        rollback_level1=levels.count("Level1"),
        rollback_level2=levels.count("Level2"),
        rollback_failed=levels.count("Failed"),
        hint_follows=sum(r.hint_followed for r in recs),
        same_screen_steps=sum(r.same_screen for r in recs),
        max_rule_steps=sum(_max_rule_holds(r, mode == "explore") for r in recs),
    )


def error_row(entry: SuiteEntry, seed: int, repeat: int, mode: str, exc: Exception) -> TaskRow:
    logger.error("%s (%s, seed %d): %s", entry.scenario.stem, mode, seed, exc)
    return TaskRow(entry.scenario.stem, entry.goal, entry.difficulty, seed, repeat, mode, False,
                   f"Error: {type(exc).__name__}", 0, 0.0, 0.0, 0.0, 0, 0, 0, 0, 0, 0, 0, 0)


def aggregate(rows: Sequence[TaskRow]) -> Aggregate:
    n = len(rows)
    steps = sum(r.steps for r in rows)
    events = sum(r.rollback_level1 + r.rollback_level2 + r.rollback_failed for r in rows)

    def ratio(attr):
        return round(sum(getattr(r, attr) for r in rows) / events, 6) if events else 0.0

    return Aggregate(
        tasks=n,
        success_rate=round(sum(r.success for r in rows) / n, 6) if n else 0.0,
        mean_steps=round(steps / n, 6) if n else 0.0,
        mean_step_latency=round(sum(r.end_to_end for r in rows) / steps, 6) if steps else 0.0,
        mean_end_to_end=round(sum(r.end_to_end for r in rows) / n, 6) if n else 0.0,
        level1_ratio=ratio("rollback_level1"),
        level2_ratio=ratio("rollback_level2"),
        failed_ratio=ratio("rollback_failed"),
        hint_follow_rate=round(sum(r.hint_follows / r.steps for r in rows if r.steps) / n, 6) if n else 0.0,
    )


def resolve_seeds(spec: SuiteSpec, config: PipelineConfig) -> Tuple[int, ...]:
    if os.environ.get(SEED_ENV):
        return (int(os.environ[SEED_ENV]),)
    if config.seed is not None:
        return (int(config.seed),)
    return spec.seeds


def entry_goal(entry: SuiteEntry, scenario, max_steps: int) -> TaskGoal:
    rule = scenario.goals[entry.goal]
    instruction = entry.instruction or rule.instruction or entry.goal
    return TaskGoal(instruction, entry.goal, max_steps=entry.max_steps or max_steps)


def run_entry(entry: SuiteEntry, seed: int, repeat: int, mode: str, config: PipelineConfig, spec: SuiteSpec,
              hint_aware: bool = True) -> TaskRow:
    try:
        scenario = load_scenario(entry.scenario)
        script = load_oracle(entry.oracle)
        if not hint_aware:
            script = script.hint_blind()
        goal = entry_goal(entry, scenario, spec.max_steps)
        cfg = replace(config, exploration_enabled=(mode == "explore"))
        report = run_task(Environment(scenario, seed=seed), goal, cfg, ScriptedReasoner(script))
    except Exception as exc:  # one broken entry must not sink the suite
        return error_row(entry, seed, repeat, mode, exc)
    return task_row(entry, seed, repeat, mode, report)


def run_suite(
    spec: SuiteSpec,
    modes: Sequence[str] = MODES,
    config: Optional[PipelineConfig] = None,
    hint_aware: bool = True,
    jobs: int = 1,
) -> SuiteReport:
    config = config or PipelineConfig()
    modes = tuple(m for m in MODES if m in set(modes))
    seeds = resolve_seeds(spec, config)
    work = [(e, s, k, m) for m in modes for e in spec.entries for s in seeds for k in range(spec.repeats)]
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        rows = list(pool.map(lambda w: run_entry(*w, config, spec, hint_aware), work))
    aggregates = {m: aggregate([r for r in rows if r.mode == m]) for m in modes}
    by_difficulty = {
        m: {d: aggregate([r for r in rows if r.mode == m and r.difficulty == d]) for d in DIFFICULTIES}
        for m in modes
    }
    return SuiteReport(spec.name, modes, tuple(rows), aggregates, by_difficulty, spec.proportions())


# --- output ---------------------------------------------------------------

TABLE_COLUMNS = ("scenario", "difficulty", "seed", "mode", "success", "steps", "end_to_end", "probes", "hint_follows", "termination")
AGG_COLUMNS = ("tasks", "success_rate", "mean_steps", "mean_step_latency", "mean_end_to_end",
               "level1_ratio", "level2_ratio", "failed_ratio", "hint_follow_rate")


def emit_report(report: SuiteReport, fmt: str = "table") -> str:
    if fmt == "machine":
        lines = [json.dumps({"record": "task", **asdict(r)}) for r in report.rows]
        lines.append(
            json.dumps(
                {
                    "record": "aggregate",
                    "suite": report.name,
                    "proportions": dict(report.proportions),
                    "modes": {m: asdict(a) for m, a in report.aggregates.items()},
                    "by_difficulty": {m: {d: asdict(a) for d, a in per.items()} for m, per in report.by_difficulty.items()},
                }
            )
        )
        return "\n".join(lines) + "\n"
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")
    table = [TABLE_COLUMNS] + [tuple(str(getattr(r, c)) for c in TABLE_COLUMNS) for r in report.rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(TABLE_COLUMNS))]
    out = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in table]
    for mode, agg in report.aggregates.items():
        out.append(f"[{mode}] " + "  ".join(f"{c}={getattr(agg, c)}" for c in AGG_COLUMNS))
    return "\n".join(out) + "\n"
