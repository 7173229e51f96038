"""Command-line entry point.

Subcommands: `run` (simulate a scenario config, then verify and compute
metrics), `solve` (one-shot IK query), `verify` / `metrics` (re-run those
stages from stored logs), `paths` (dump a reference path).

Exit codes: 0 success, 1 solver/runtime failure, 2 bad configuration or
malformed input. `run` exits nonzero if the config sets
`expect_no_collisions` and the offline verifier finds any.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .costs import CostWeights, GoalSpec
from .harness import (
    CollisionReport,
    compute_metrics,
    load_scenario,
    read_run_logs,
    resolve_input,
    run_scenario,
    verify_collisions_offline,
    write_metrics_csv,
    write_run_logs,
)
from .kinematics import ArmState, Pose, end_effector_pose
from .model import DescriptionError, load_robot_model
from .paths import PathSpec, generate_path
from .solver import SolveRequest, solve


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        spec = load_scenario(args.config, seed_override=args.seed, trials_override=args.trials)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        return _fail(f"bad config: {exc}", 2)

    out_dir = Path(args.out) if args.out else Path("out") / spec.name
    out_dir.mkdir(parents=True, exist_ok=True)
    pair_dump: list | None = [] if args.dump_active_pairs else None
    try:
        logs = run_scenario(spec, pair_dump=pair_dump, quiet=args.quiet, workers=args.workers)
    except Exception as exc:  # solver hard failure
        return _fail(f"scenario run failed: {exc}", 1)

    log_paths = write_run_logs(logs, out_dir, spec.name)
    if pair_dump is not None:
        with open(out_dir / f"{spec.name}_active_pairs.jsonl", "w", encoding="utf-8") as fh:
            for row in pair_dump:
                fh.write(json.dumps(row, sort_keys=True) + "\n")

    report = None
    if not args.skip_verify:
        report = verify_collisions_offline(logs, spec)
    if not args.skip_metrics:
        metrics = compute_metrics(logs, spec, report)
        with open(out_dir / f"{spec.name}_metrics.json", "w", encoding="utf-8") as fh:
            json.dump(metrics.to_json(), fh, sort_keys=True, indent=2)
            fh.write("\n")
        write_metrics_csv(metrics, out_dir / f"{spec.name}_metrics.csv")

    times = np.array([t for log in logs for t in log.solve_times])
    timing = {
        "solves": int(times.size),
        "median_ms": float(np.median(times) * 1e3),
        "p90_ms": float(np.percentile(times, 90) * 1e3),
        "max_ms": float(times.max() * 1e3),
    }
    with open(out_dir / f"{spec.name}_timing.json", "w", encoding="utf-8") as fh:
        json.dump(timing, fh, sort_keys=True, indent=2)
        fh.write("\n")

    if not args.quiet:
        print(f"wrote {len(log_paths)} trial logs to {out_dir}")
        if report is not None:
            print(f"offline verification: {report.per_trial} colliding ticks per trial")
        print(f"median solve time {timing['median_ms']:.2f} ms")

    if report is not None and spec.expect_no_collisions and report.total > 0:
        return _fail(
            f"collisions detected ({report.per_trial} per trial) but config expects none", 1
        )
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    try:
        model = load_robot_model(resolve_input(args.model, None, "models"))
        q_curr = np.asarray(json.loads(args.q), dtype=float)
        goal_doc = json.loads(args.goal)
        target = Pose(
            np.asarray(goal_doc["position"], dtype=float),
            np.asarray(goal_doc.get("orientation", [1.0, 0, 0, 0]), dtype=float),
        )
        mode = goal_doc.get("mode", "pose")
        if mode == "position":
            goal = GoalSpec.position(target, w11=float(goal_doc.get("w11", 1.0)))
        elif mode == "orientation":
            goal = GoalSpec.orientation(target, w12=float(goal_doc.get("w12", 1.0)))
        else:
            goal = GoalSpec.pose(
                target,
                w11=float(goal_doc.get("w11", 1.0)),
                w12=float(goal_doc.get("w12", 1.0)),
            )
        if q_curr.shape[0] != model.n:
            return _fail(f"q has {q_curr.shape[0]} entries, model needs {model.n}", 2)
    except (OSError, ValueError, KeyError, DescriptionError) as exc:
        return _fail(f"bad input: {exc}", 2)

    rng = np.random.default_rng(args.seed) if args.seed is not None else None
    request = SolveRequest(
        model=model,
        state=ArmState(q=q_curr, stamp=0.0),
        goal=goal,
        dt=args.dt,
        weights=CostWeights(),
    )
    result = solve(request, rng)
    ee = end_effector_pose(model, result.q_cmd)
    print(
        json.dumps(
            {
                "q_cmd": [float(v) for v in result.q_cmd],
                "status": result.status,
                "iterations": result.iterations,
                "cost_breakdown": {k: float(v) for k, v in result.cost_breakdown.items()},
                "total_cost": float(result.total_cost),
                "ee_position": [float(v) for v in ee.position],
                "ee_orientation": [float(v) for v in ee.orientation],
                "wall_time_s": result.wall_time,
            },
            sort_keys=True,
            indent=2,
        )
    )
    return 0


def _load_logs_for(args: argparse.Namespace):
    spec = load_scenario(args.config)
    paths = sorted(Path(args.logs).glob(f"{spec.name}_trial*.jsonl"))
    if not paths:
        raise FileNotFoundError(f"no run logs for '{spec.name}' under {args.logs}")
    return spec, read_run_logs(paths)


def _cmd_verify(args: argparse.Namespace) -> int:
    try:
        spec, logs = _load_logs_for(args)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(str(exc), 2)
    report = verify_collisions_offline(logs, spec, resolution=args.resolution)
    print(json.dumps({"scenario": spec.name, "collisions_per_trial": report.per_trial,
                      "total": report.total}, sort_keys=True))
    if spec.expect_no_collisions and report.total > 0:
        return 1
    return 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    try:
        spec, logs = _load_logs_for(args)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(str(exc), 2)
    report = CollisionReport([], [])
    metrics = compute_metrics(logs, spec, report)
    out = json.dumps(metrics.to_json(), sort_keys=True, indent=2)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        with open(Path(args.out) / f"{spec.name}_metrics.json", "w", encoding="utf-8") as fh:
            fh.write(out + "\n")
        write_metrics_csv(metrics, Path(args.out) / f"{spec.name}_metrics.csv")
    print(out)
    return 0


def _cmd_paths(args: argparse.Namespace) -> int:
    try:
        spec = PathSpec(
            shape=args.shape,
            plane=args.plane,
            center=np.asarray(json.loads(args.center), dtype=float),
            size=args.size,
            duration=args.duration,
            sample_period=args.period,
        )
    except (ValueError, json.JSONDecodeError) as exc:
        return _fail(f"bad path spec: {exc}", 2)
    waypoints = generate_path(spec)
    print(
        json.dumps(
            {
                "shape": spec.shape,
                "plane": spec.plane,
                "count": len(waypoints),
                "waypoints": [
                    {"stamp": round(w.stamp, 9), "position": [float(v) for v in w.position]}
                    for w in waypoints
                ],
            },
            sort_keys=True,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dawnik",
        description="Collision-aware IK solver and multi-arm scenario simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario, verify and score it")
    p_run.add_argument("--config", required=True, help="scenario config JSON")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--trials", type=int, default=None, help="override the trial count")
    p_run.add_argument("--quiet", action="store_true")
    p_run.add_argument("--dump-active-pairs", action="store_true",
                       help="write per-tick active-pair JSON lines")
    p_run.add_argument("--workers", type=int, default=1,
                       help="parallel trial processes (trials are independent)")
    p_run.add_argument("--skip-verify", action="store_true")
    p_run.add_argument("--skip-metrics", action="store_true")
    p_run.set_defaults(func=_cmd_run)

    p_solve = sub.add_parser("solve", help="one-shot IK solve")
    p_solve.add_argument("--model", required=True, help="robot description file")
    p_solve.add_argument("--q", required=True, help="current joints as a JSON list")
    p_solve.add_argument("--goal", required=True,
                         help='goal JSON: {"mode","position","orientation","w11","w12"}')
    p_solve.add_argument("--dt", type=float, default=1.0)
    p_solve.add_argument("--seed", type=int, default=None)
    p_solve.set_defaults(func=_cmd_solve)

    p_verify = sub.add_parser("verify", help="offline collision check of stored logs")
    p_verify.add_argument("--config", required=True)
    p_verify.add_argument("--logs", required=True, help="directory holding trial logs")
    p_verify.add_argument("--resolution", type=int, default=None)
    p_verify.set_defaults(func=_cmd_verify)

    p_metrics = sub.add_parser("metrics", help="tracking metrics from stored logs")
    p_metrics.add_argument("--config", required=True)
    p_metrics.add_argument("--logs", required=True)
    p_metrics.add_argument("--out", default=None)
    p_metrics.set_defaults(func=_cmd_metrics)

    p_paths = sub.add_parser("paths", help="dump a reference path as JSON")
    p_paths.add_argument("--shape", required=True, choices=["square", "circle", "eight", "hold"])
    p_paths.add_argument("--plane", default="XY", choices=["XY", "YZ"])
    p_paths.add_argument("--center", default="[0,0,0]")
    p_paths.add_argument("--size", type=float, default=0.1)
    p_paths.add_argument("--duration", type=float, default=9.0)
    p_paths.add_argument("--period", type=float, default=0.03)
    p_paths.set_defaults(func=_cmd_paths)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
