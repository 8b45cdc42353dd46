"""Command-line entry point: ``uiexplore run|task|inspect|replay``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence

from .bench import MODES, SEED_ENV, SuiteEntry, emit_report, entry_goal, load_suite, run_suite
from .core import parse_action
from .pipeline import PipelineConfig, StepRecord, run_task
from .reasoner import ScriptedReasoner, load_oracle
from .sim.environment import Environment, InvalidAction
from .sim.scenario import load_scenario

BUNDLED_SUITES = ("default", "tiers")


def data_path(*parts: str) -> Path:
    node = resources.files("uiexplore").joinpath("data")
    for part in parts:  # one segment at a time: MultiplexedPath on 3.10 takes a single argument
        node = node.joinpath(part)
    return Path(str(node))


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


_CONFIG_TYPES = {
    "exploration.enabled": _bool,
    "exploration.max_depth": int,
    "exploration.max_probes": int,
    "exploration.lambda": float,
    "phash.tau": int,
    "hints.delta": int,
    "hints.k_max": int,
    "hints.char_budget": int,
    "budget.margin": float,
    "budget.floor_s": float,
    "seed": int,
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    group = p.add_argument_group("pipeline configuration")
    for key, kind in _CONFIG_TYPES.items():
        group.add_argument(f"--{key}", dest=f"cfg:{key}", type=kind, default=None, metavar=kind.__name__.strip("_").upper())


def _config(args) -> PipelineConfig:
    values = {k.split(":", 1)[1]: v for k, v in vars(args).items() if k.startswith("cfg:") and v is not None}
    config = PipelineConfig.from_mapping(values)
    if os.environ.get(SEED_ENV):
        config = replace(config, seed=int(os.environ[SEED_ENV]))
    return config


def _modes(mode: str) -> Sequence[str]:
    return MODES if mode == "both" else (mode,)


def _suite_path(name: str) -> Path:
    if name in BUNDLED_SUITES:
        return data_path("suites", name, "suite.yaml")
    return Path(name)


def cmd_run(args) -> int:
    spec = load_suite(_suite_path(args.suite))
    report = run_suite(spec, _modes(args.mode), _config(args), hint_aware=not args.hint_blind, jobs=args.jobs)
    sys.stdout.write(emit_report(report, args.format))
    return 0


def _trace_line(env: Environment, record: StepRecord, started_ms: int) -> str:
    return f"{record.step_index}\t{record.action}\t{env.screen_id}\t{started_ms / 1000:.3f}"


def run_traced(scenario_path: Path, goal_id: Optional[str], oracle_path: Path, config: PipelineConfig, hint_aware: bool = True):
    """Run one scenario and return (report, golden-trace lines)."""
    scenario = load_scenario(scenario_path)
    goal_id = goal_id or next(iter(scenario.goals))
    script = load_oracle(oracle_path)
    if not hint_aware:
        script = script.hint_blind()
    goal = entry_goal(SuiteEntry(Path(scenario_path), goal_id, "easy"), scenario, 25)
    env = Environment(scenario, seed=config.seed)
    lines: List[str] = []

    def on_step(env, record):
        started = env.clock.now_ms - round(record.action_latency * 1000)
        lines.append(_trace_line(env, record, started))

    report = run_task(env, goal, config, ScriptedReasoner(script), on_step=on_step)
    return report, lines


def cmd_task(args) -> int:
    scenario = Path(args.scenario)
    oracle = Path(args.oracle) if args.oracle else scenario.with_suffix(".oracle")
    base = _config(args)
    status = 0
    for mode in _modes(args.mode):
        config = replace(base, exploration_enabled=(mode == "explore"))
        report, lines = run_traced(scenario, args.goal, oracle, config, hint_aware=not args.hint_blind)
        if args.format == "machine":
            print(json.dumps({"mode": mode, "success": report.success, "steps": report.steps,
                              "end_to_end": round(report.end_to_end_latency, 6), "termination": report.termination.value}))
        else:
            print(f"[{mode}] success={report.success} steps={report.steps} "
                  f"end_to_end={report.end_to_end_latency:.3f}s termination={report.termination.value}")
            for line in lines:
                print("  " + line)
        if args.trace_out:
            out = Path(args.trace_out)
            if len(_modes(args.mode)) > 1:
                out = out.with_name(f"{out.stem}.{mode}{out.suffix}")
            out.write_text("\n".join(lines) + "\n")
        status = status or (0 if report.success else 1)
    return status


def cmd_inspect(args) -> int:
    sc = load_scenario(Path(args.scenario))
    print(f"scenario {sc.name}: start={sc.start_screen} home={sc.home_screen} seed={sc.seed}")
    for sid, screen in sc.screens.items():
        kind = " (overlay)" if screen.overlay else ""
        back = f" back->{screen.back_target}" if screen.back_target else ""
        print(f"screen {sid}{kind}{back}")
        for e in screen.elements:
            t = sc.transition(sid, e.id)
            arrow = ""
            if t is not None:
                attrs = f" [{', '.join(sorted(t.attributes))}]" if t.attributes else ""
                arrow = f" -> {t.target}{attrs}"
            flag = "" if e.clickable else " (static)"
            print(f"  {e.id}: {e.label or e.resource_id}{flag}{arrow}")
    for i in sc.interrupts:
        print(f"interrupt {i.kind} at {i.at:.3f}s")
    for gid, rule in sc.goals.items():
        print(f"goal {gid}: {rule}")
    return 0


def cmd_replay(args) -> int:
    """Re-execute a golden trace's actions and compare visible screens."""
    sc = load_scenario(Path(args.scenario))
    env = Environment(sc, seed=args.seed)
    mismatches = 0
    for raw in Path(args.trace).read_text().splitlines():
        if not raw.strip():
            continue
        step, action_text, screen_id, clock = raw.split("\t")
        env.clock.advance_to(round(float(clock) * 1000))
        action = parse_action(action_text, env.observe())
        try:
            env.execute(action)
        except InvalidAction as exc:
            print(f"{step}\t{action_text}\tinvalid: {exc}")
            mismatches += 1
            continue
        ok = env.screen_id == screen_id
        mismatches += not ok
        print(f"{step}\t{action_text}\t{env.screen_id}\t{'ok' if ok else 'expected ' + screen_id}")
    return 1 if mismatches else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uiexplore", description="Exploration-while-reasoning GUI agent benchmark")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario suite")
    run.add_argument("suite", nargs="?", default="default", help="suite file, or 'default' / 'tiers'")
    run.add_argument("--mode", choices=("sequential", "explore", "both"), default="both")
    run.add_argument("--format", choices=("table", "machine"), default="table")
    run.add_argument("--hint-blind", action="store_true", help="drop hint-reading oracle rules")
    run.add_argument("--jobs", type=int, default=1)
    _add_config_flags(run)
    run.set_defaults(func=cmd_run)

    task = sub.add_parser("task", help="run one scenario")
    task.add_argument("scenario")
    task.add_argument("--goal")
    task.add_argument("--oracle", help="oracle script (default: next to the scenario)")
    task.add_argument("--mode", choices=("sequential", "explore", "both"), default="explore")
    task.add_argument("--format", choices=("table", "machine"), default="table")
    task.add_argument("--hint-blind", action="store_true")
    task.add_argument("--trace-out", help="write the golden trace here")
    _add_config_flags(task)
    task.set_defaults(func=cmd_task)

    inspect = sub.add_parser("inspect", help="dump a scenario graph")
    inspect.add_argument("scenario")
    inspect.set_defaults(func=cmd_inspect)

    rp = sub.add_parser("replay", help="replay a golden trace against a scenario")
    rp.add_argument("scenario")
    rp.add_argument("trace")
    rp.add_argument("--seed", type=int)
    rp.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
