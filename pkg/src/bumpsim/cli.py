"""Command-line front end: run scenarios, compare modes, emit artifacts.

Exit codes: 0 on a completed run, 2 for unreadable/invalid scenarios,
3 for simulation faults (jump-cap non-convergence, penetration, or a
non-separable local phase).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .collision import PenetrationError
from .hybrid import SimMode, metrics, simulate, write_plot_csv, write_trace_csv
from .redesign import NonSeparableError
from .scenario import Scenario, ScenarioError, load_scenario, validate_scenario

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FAULT = 3


@dataclass(slots=True)
class RunConfig:
    scenario_path: Path
    mode: SimMode
    out_dir: Path
    dt: float | None = None
    t_max: float | None = None
    emit_trace: bool = True


def _load_and_validate(path: Path) -> Scenario | None:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read scenario {path}: {exc}", file=sys.stderr)
        return None
    try:
        scenario = load_scenario(text)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None
    violations = validate_scenario(scenario)
    if violations:
        for violation in violations:
            print(f"invalid scenario: {violation}", file=sys.stderr)
        return None
    return scenario


def _apply_overrides(scenario: Scenario, cfg: RunConfig) -> Scenario:
    changes = {}
    if cfg.dt is not None:
        changes["dt"] = cfg.dt
    if cfg.t_max is not None:
        changes["t_max"] = cfg.t_max
    return dataclasses.replace(scenario, **changes) if changes else scenario


def cmd_run(cfg: RunConfig) -> int:
    scenario = _load_and_validate(cfg.scenario_path)
    if scenario is None:
        return EXIT_INVALID
    scenario = _apply_overrides(scenario, cfg)

    try:
        trace = simulate(scenario, cfg.mode)
    except (PenetrationError, NonSeparableError) as exc:
        print(f"simulation fault: {exc}", file=sys.stderr)
        return EXIT_FAULT

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    summary = metrics(trace)
    if cfg.emit_trace:
        write_trace_csv(trace, cfg.out_dir / "trace.csv")
    payload = summary.to_dict()
    payload["mode"] = cfg.mode.value
    (cfg.out_dir / "metrics.json").write_text(
        json.dumps(payload, indent=2) + "\n", encoding="utf-8"
    )
    for rid in sorted(scenario.robot_ids()):
        write_plot_csv(trace, rid, cfg.out_dir / f"plot_robot{rid}.csv")

    for rid, m in sorted(summary.robots.items()):
        status = f"reached at t={m.completion_time:.3f}s" if m.reached else "not reached"
        print(f"robot {rid}: {status}, {m.collisions} collision(s)")
    if summary.fault:
        reasons = list(summary.fault_reasons)
        shown = "; ".join(reasons[:3])
        if len(reasons) > 3:
            shown += f"; ... ({len(reasons)} records total)"
        print(f"simulation fault: {shown}", file=sys.stderr)
        return EXIT_FAULT
    return EXIT_OK


def _metrics_or_error(scenario: Scenario, mode: SimMode) -> dict:
    try:
        summary = metrics(simulate(scenario, mode))
    except (PenetrationError, NonSeparableError) as exc:
        return {"error": str(exc)}
    out = summary.to_dict()
    out["completed"] = all(m.reached for m in summary.robots.values()) and not summary.fault
    return out


def cmd_compare(cfg: RunConfig) -> int:
    scenario = _load_and_validate(cfg.scenario_path)
    if scenario is None:
        return EXIT_INVALID
    scenario = _apply_overrides(scenario, cfg)

    baseline = _metrics_or_error(scenario, SimMode.PREDEFINED_ONLY)
    redesigned = _metrics_or_error(scenario, SimMode.REDESIGNED)

    deltas = {}
    if "robots" in baseline and "robots" in redesigned:
        deltas["collisions"] = {
            rid: baseline["robots"][rid]["collisions"] - redesigned["robots"][rid]["collisions"]
            for rid in redesigned["robots"]
        }
        deltas["completed"] = {
            "predefined": baseline.get("completed", False),
            "redesigned": redesigned.get("completed", False),
        }

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    payload = {"predefined": baseline, "redesigned": redesigned, "deltas": deltas}
    (cfg.out_dir / "compare.json").write_text(
        json.dumps(payload, indent=2) + "\n", encoding="utf-8"
    )

    completed = redesigned.get("completed", False)
    print(f"redesigned completed: {completed}; baseline completed: {baseline.get('completed', False)}")
    return EXIT_OK if completed else EXIT_FAULT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bumpsim",
        description="Simulate two unicycle robots with allowable collisions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario in one mode")
    run.add_argument("--scenario", required=True, type=Path, help="scenario JSON file")
    run.add_argument(
        "--mode",
        choices=[m.value for m in SimMode],
        default=SimMode.REDESIGNED.value,
        help="controller mode (default: redesigned)",
    )
    run.add_argument("--dt", type=float, default=None, help="integration step override [s]")
    run.add_argument("--t-max", type=float, default=None, help="horizon override [s]")
    run.add_argument("--out", required=True, type=Path, help="output directory")
    run.add_argument("--no-trace", action="store_true", help="skip writing trace.csv")

    compare = sub.add_parser("compare", help="run both modes and diff the metrics")
    compare.add_argument("--scenario", required=True, type=Path)
    compare.add_argument("--dt", type=float, default=None)
    compare.add_argument("--t-max", type=float, default=None)
    compare.add_argument("--out", required=True, type=Path)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.dt is not None and args.dt <= 0:
        print("error: --dt must be positive", file=sys.stderr)
        return EXIT_INVALID
    if args.t_max is not None and args.t_max <= 0:
        print("error: --t-max must be positive", file=sys.stderr)
        return EXIT_INVALID
    cfg = RunConfig(
        scenario_path=args.scenario,
        mode=SimMode(getattr(args, "mode", SimMode.REDESIGNED.value)),
        out_dir=args.out,
        dt=args.dt,
        t_max=args.t_max,
        emit_trace=not getattr(args, "no_trace", False),
    )
    if args.command == "run":
        return cmd_run(cfg)
    return cmd_compare(cfg)


if __name__ == "__main__":
    sys.exit(main())
