"""Scenario simulator: decentralized multi-solver ticking, logging, offline
collision verification, and tracking-error metrics.

The simulated clock advances at the scenario tick rate (100 Hz by default).
Each tick: external arms advance by trajectory playback, every controlled
arm's solver gets a snapshot of all *other* arms' current joint positions
(never their plans), and the computed commands are committed together at the
tick end; the plant is kinematic, commands apply instantly. The reference
waypoint advances on its own coarser schedule.

Coordinate convention: solver requests are expressed in the controlled arm's
base frame; the harness transforms goals and foreign spheres into that frame
and transforms results back to world for logging.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .costs import CostWeights, GoalSpec
from .geometry import (
    Transform,
    matrix_from_quat,
    quat_from_matrix,
    rotation_vector_from_matrix,
    rpy_matrix,
)
from .kinematics import (
    ArmState,
    Pose,
    advance_state,
    batch_forward_kinematics,
    batch_sphere_centers,
    combine_spheres,
    end_effector_pose,
    sphere_world_positions,
)
from .model import AllowedCollisionMatrix, RobotModel, build_acm, load_robot_model, refit_spheres
from .paths import PathSpec, Waypoint, generate_path, waypoint_in_force
from .proximity import ProximityConfig
from .solver import SolveRequest, SolverConfig, solve

DATA_DIR = Path(__file__).parent / "data"
CONFIG_DIR_ENV = "DAWNIK_DEFAULT_CONFIG_DIR"


def default_config_dir() -> Path:
    override = os.environ.get(CONFIG_DIR_ENV)
    return Path(override) if override else DATA_DIR / "scenarios"


def resolve_input(name: str | Path, config_dir: Path | None, subdir: str) -> Path:
    """Locate a model/trajectory file: absolute, beside the config, in the
    default config dir, or in the packaged data."""
    p = Path(name)
    candidates = [p]
    if config_dir is not None:
        candidates.append(config_dir / p)
    candidates.append(default_config_dir() / p)
    candidates.append(DATA_DIR / subdir / p)
    for c in candidates:
        if c.is_file():
            return c
    raise FileNotFoundError(f"cannot locate '{name}' (tried {[str(c) for c in candidates]})")


# -- scenario specification ----------------------------------------------------


@dataclass
class ControlledArm:
    name: str
    model: RobotModel
    base: Transform
    q0: np.ndarray
    path: PathSpec
    goal_mode: str  # "position" | "pose"
    goal_orientation: np.ndarray | None  # None: hold the starting orientation
    w11: float
    w12: float
    weights: CostWeights
    waypoints: list[Waypoint] = field(default_factory=list)

    def __post_init__(self):
        if not self.waypoints:
            self.waypoints = generate_path(self.path)
        if self.goal_orientation is None:
            world = end_effector_pose(self.model, self.q0, self.base)
            self.goal_orientation = world.orientation


@dataclass
class ExternalArm:
    name: str
    model: RobotModel
    base: Transform
    stamps: np.ndarray  # (T,)
    positions: np.ndarray  # (T, m)

    def q_at(self, t: float) -> np.ndarray:
        """Looping linear interpolation of the played-back trajectory."""
        period = self.stamps[-1]
        if period > 0:
            t = t % period
        idx = int(np.searchsorted(self.stamps, t, side="right")) - 1
        idx = max(0, min(idx, len(self.stamps) - 2))
        t0, t1 = self.stamps[idx], self.stamps[idx + 1]
        alpha = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        return self.positions[idx] + alpha * (self.positions[idx + 1] - self.positions[idx])


@dataclass
class ScenarioSpec:
    scenario_id: str
    name: str
    controlled: list[ControlledArm]
    externals: list[ExternalArm]
    duration: float
    tick_rate: float = 100.0
    trials: int = 5
    seed: int = 0
    expect_no_collisions: bool = True
    proximity: ProximityConfig = field(default_factory=ProximityConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    verify_resolution: int = 2

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_rate

    @property
    def num_ticks(self) -> int:
        return math.ceil(self.tick_rate * self.duration)

    @property
    def arm_names(self) -> list[str]:
        return [a.name for a in self.controlled] + [e.name for e in self.externals]


def _transform_from_raw(raw: dict | None) -> Transform:
    if not raw:
        return Transform.identity()
    xyz = np.asarray(raw.get("xyz", [0, 0, 0]), dtype=float)
    rpy = raw.get("rpy", [0, 0, 0])
    return Transform(rpy_matrix(*rpy), xyz)


def load_trajectory(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """Trajectory file: CSV rows of stamp, q_1..q_m ('#' comments allowed)."""
    rows = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    stamps = rows[:, 0]
    if np.any(np.diff(stamps) <= 0):
        raise ValueError(f"{path}: trajectory stamps must be strictly increasing")
    return stamps, rows[:, 1:]


def load_scenario(path: str | Path, seed_override: int | None = None,
                  trials_override: int | None = None) -> ScenarioSpec:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    cfg_dir = path.parent

    def weights_from(raw: dict | None) -> CostWeights:
        return CostWeights(**raw) if raw else CostWeights()

    controlled = []
    for raw in doc.get("controlled", []):
        model = load_robot_model(resolve_input(raw["model"], cfg_dir, "models"))
        p = raw["path"]
        spec = PathSpec(
            shape=p["shape"],
            plane=p.get("plane", "XY"),
            center=np.asarray(p["center"], dtype=float),
            size=float(p.get("size", 0.1)),
            duration=float(p.get("duration", doc.get("duration", 10.0))),
            sample_period=float(p.get("sample_period", 0.03)),
        )
        goal = raw.get("goal", {})
        orientation = goal.get("orientation")
        controlled.append(
            ControlledArm(
                name=raw["name"],
                model=model,
                base=_transform_from_raw(raw.get("base")),
                q0=np.asarray(raw["q0"], dtype=float),
                path=spec,
                goal_mode=goal.get("mode", "pose"),
                goal_orientation=None if orientation is None else np.asarray(orientation, float),
                w11=float(goal.get("w11", 1.0)),
                w12=float(goal.get("w12", 1.0)),
                weights=weights_from(raw.get("weights")),
            )
        )

    externals = []
    for raw in doc.get("externals", []):
        model = load_robot_model(resolve_input(raw["model"], cfg_dir, "models"))
        stamps, positions = load_trajectory(
            resolve_input(raw["trajectory"], cfg_dir, "trajectories")
        )
        if positions.shape[1] != model.n:
            raise ValueError(
                f"trajectory for '{raw['name']}' has {positions.shape[1]} joints, "
                f"model has {model.n}"
            )
        externals.append(
            ExternalArm(
                name=raw["name"],
                model=model,
                base=_transform_from_raw(raw.get("base")),
                stamps=stamps,
                positions=positions,
            )
        )

    return ScenarioSpec(
        scenario_id=doc.get("id", "S1"),
        name=doc.get("name", path.stem),
        controlled=controlled,
        externals=externals,
        duration=float(doc["duration"]),
        tick_rate=float(doc.get("tick_rate", 100.0)),
        trials=trials_override if trials_override is not None else int(doc.get("trials", 5)),
        seed=seed_override if seed_override is not None else int(doc.get("seed", 0)),
        expect_no_collisions=bool(doc.get("expect_no_collisions", True)),
        proximity=ProximityConfig(**doc.get("proximity", {})),
        solver=SolverConfig(**doc.get("solver", {})),
        verify_resolution=int(doc.get("verify_resolution", 2)),
    )


# -- simulation -----------------------------------------------------------------


@dataclass
class TickRecord:
    trial: int
    tick: int
    stamp: float
    arm: str
    kind: str  # "controlled" | "external"
    q: np.ndarray
    ee_position: np.ndarray  # world frame
    ee_orientation: np.ndarray
    ref_position: np.ndarray | None
    ref_orientation: np.ndarray | None
    min_gap: float | None
    status: str | None
    iterations: int

    def to_json(self) -> dict:
        def arr(a):
            return None if a is None else [float(x) for x in a]

        return {
            "trial": self.trial,
            "tick": self.tick,
            "stamp": round(self.stamp, 9),
            "arm": self.arm,
            "kind": self.kind,
            "q": arr(self.q),
            "ee_pos": arr(self.ee_position),
            "ee_quat": arr(self.ee_orientation),
            "ref_pos": arr(self.ref_position),
            "ref_quat": arr(self.ref_orientation),
            "min_gap": None if self.min_gap is None else float(self.min_gap),
            "status": self.status,
            "iterations": self.iterations,
        }


@dataclass
class TrialLog:
    trial: int
    records: list[TickRecord]
    solve_times: list[float]  # seconds, one per controlled-arm solve

    def records_for(self, arm: str) -> list[TickRecord]:
        return [r for r in self.records if r.arm == arm]


def _arm_rng(seed: int, trial: int, name: str) -> np.random.Generator:
    digest = hashlib.sha256(name.encode()).digest()
    key = int.from_bytes(digest[:8], "big")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, trial, key])))


def run_trial(spec: ScenarioSpec, trial: int, pair_dump: list | None = None) -> TrialLog:
    """Execute one trial of a scenario (independent of every other trial)."""
    dt = spec.dt
    # Per-controlled-arm ACM over [self | other arms in scene order].
    acms: list[AllowedCollisionMatrix] = []
    others_order: list[list[int]] = []  # indices into the unified arm list
    all_models = [a.model for a in spec.controlled] + [e.model for e in spec.externals]
    for i, arm in enumerate(spec.controlled):
        order = [j for j in range(len(all_models)) if j != i]
        others_order.append(order)
        acms.append(build_acm(arm.model, [all_models[j] for j in order]))

    rngs = [_arm_rng(spec.seed, trial, a.name) for a in spec.controlled]
    states = [ArmState(q=a.q0.copy(), stamp=0.0) for a in spec.controlled]
    records: list[TickRecord] = []
    times: list[float] = []

    for tick in range(spec.num_ticks):
        t = tick * dt
        ext_qs = [e.q_at(t) for e in spec.externals]
        # World-frame sphere snapshots of every arm at tick start.
        world = [
            sphere_world_positions(a.model, states[i].q, a.base, arm_index=i)
            for i, a in enumerate(spec.controlled)
        ] + [
            sphere_world_positions(e.model, ext_qs[k], e.base,
                                   arm_index=len(spec.controlled) + k)
            for k, e in enumerate(spec.externals)
        ]

        commands = []
        for i, arm in enumerate(spec.controlled):
            ref = waypoint_in_force(arm.waypoints, t, arm.path.sample_period)
            inv = arm.base.inverse()
            target_pos = inv.apply(ref.position)
            target_quat = quat_from_matrix(
                np.asarray(inv.R) @ matrix_from_quat(arm.goal_orientation)
            )
            target = Pose(target_pos, target_quat)
            if arm.goal_mode == "position":
                goal = GoalSpec.position(target, w11=arm.w11)
            else:
                goal = GoalSpec.pose(target, w11=arm.w11, w12=arm.w12)

            foreign = []
            for rank, j in enumerate(others_order[i], start=1):
                w = world[j]
                foreign.append(
                    type(w)(
                        ids=w.ids,
                        centers=inv.apply_points(w.centers),
                        radii=w.radii,
                        owners=np.full(w.count, rank, dtype=int),
                        link_idx=w.link_idx,
                    )
                )
            snapshot = combine_spheres(foreign) if foreign else None

            req = SolveRequest(
                model=arm.model,
                state=states[i],
                goal=goal,
                dt=dt,
                weights=arm.weights,
                snapshot=snapshot,
                snapshot_stamp=states[i].stamp,
                acm=acms[i],
                proximity=spec.proximity,
                solver=spec.solver,
            )
            res = solve(req, rngs[i])
            times.append(res.wall_time)
            commands.append(res)
            if pair_dump is not None:
                pair_dump.append(
                    {
                        "trial": trial,
                        "tick": tick,
                        "arm": arm.name,
                        "pairs": [
                            {"a": p.id_a, "b": p.id_b, "gap": round(p.gap, 6)}
                            for p in (res.active_pairs or [])
                        ],
                    }
                )

        # Commit all commands together, then log the tick.
        for i, arm in enumerate(spec.controlled):
            res = commands[i]
            states[i] = advance_state(states[i], res.q_cmd, stamp=t + dt, dt=dt)
            ee = end_effector_pose(arm.model, res.q_cmd, arm.base)
            ref = waypoint_in_force(arm.waypoints, t, arm.path.sample_period)
            records.append(
                TickRecord(
                    trial=trial,
                    tick=tick,
                    stamp=t,
                    arm=arm.name,
                    kind="controlled",
                    q=res.q_cmd,
                    ee_position=ee.position,
                    ee_orientation=ee.orientation,
                    ref_position=ref.position,
                    ref_orientation=arm.goal_orientation,
                    min_gap=res.min_gap,
                    status=res.status,
                    iterations=res.iterations,
                )
            )
        for k, e in enumerate(spec.externals):
            ee = end_effector_pose(e.model, ext_qs[k], e.base)
            records.append(
                TickRecord(
                    trial=trial,
                    tick=tick,
                    stamp=t,
                    arm=e.name,
                    kind="external",
                    q=ext_qs[k],
                    ee_position=ee.position,
                    ee_orientation=ee.orientation,
                    ref_position=None,
                    ref_orientation=None,
                    min_gap=None,
                    status=None,
                    iterations=0,
                )
            )
    return TrialLog(trial=trial, records=records, solve_times=times)


def _trial_job(args) -> TrialLog:
    spec, trial = args
    return run_trial(spec, trial)


def run_scenario(
    spec: ScenarioSpec,
    pair_dump: list | None = None,
    quiet: bool = True,
    workers: int | None = None,
) -> list[TrialLog]:
    """Execute all trials of a scenario; returns one log per trial.

    Trials are independent (per-trial seed streams), so with `workers` > 1
    they run in parallel processes; results are identical either way. The
    active-pair dump forces serial execution.
    """
    if workers and workers > 1 and pair_dump is None and spec.trials > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=min(workers, spec.trials)) as pool:
            logs = list(pool.map(_trial_job, [(spec, t) for t in range(spec.trials)]))
    else:
        logs = [run_trial(spec, trial, pair_dump) for trial in range(spec.trials)]
    if not quiet:
        for log in logs:
            print(f"[{spec.name}] trial {log.trial + 1}/{spec.trials}: "
                  f"{spec.num_ticks} ticks, median solve "
                  f"{1e3 * float(np.median(log.solve_times)):.2f} ms")
    return logs


# -- offline collision verification ----------------------------------------------


def _verification_acm(models: list[RobotModel], controlled_flags: list[bool]) -> np.ndarray:
    """Skip mask over the concatenated refined spheres: intra-arm skips follow
    each arm's adjacency/never lists; pairs between two external arms are
    skipped; anything touching a controlled arm is checked."""
    sizes = [m.num_spheres for m in models]
    total = sum(sizes)
    allowed = np.zeros((total, total), dtype=bool)
    offset = 0
    owners = np.zeros(total, dtype=int)
    for idx, m in enumerate(models):
        s = slice(offset, offset + sizes[idx])
        owners[s] = idx
        link_of = m.sphere_link
        block = (np.abs(link_of[:, None] - link_of[None, :]) <= 1)
        for a, b in m.never_collide:
            ia, ib = m.link_index(a), m.link_index(b)
            block |= (link_of[:, None] == ia) & (link_of[None, :] == ib)
            block |= (link_of[:, None] == ib) & (link_of[None, :] == ia)
        allowed[s, s] = block
        offset += sizes[idx]
    ext = np.array([not controlled_flags[o] for o in owners])
    allowed[np.ix_(ext, ext)] = True
    np.fill_diagonal(allowed, True)
    return allowed


@dataclass
class CollisionReport:
    per_trial: list[int]  # colliding ticks per trial
    first_events: list[tuple[int, int, float] | None]  # (trial, tick, gap) or None

    @property
    def total(self) -> int:
        return sum(self.per_trial)


def verify_collisions_offline(
    logs: list[TrialLog], spec: ScenarioSpec, resolution: int | None = None
) -> CollisionReport:
    """Re-check every logged tick with refined spheres and zero margin.

    Geometry is rebuilt at doubled sphere resolution, configurations are
    interpolated between consecutive ticks to catch tunneling, and any
    non-skipped pair with a negative gap marks the tick as colliding. This
    checker is deliberately independent of the runtime broad phase: it
    evaluates all pairs.
    """
    resolution = resolution if resolution is not None else spec.verify_resolution
    arms = [(a.name, a.model, a.base, True) for a in spec.controlled] + [
        (e.name, e.model, e.base, False) for e in spec.externals
    ]
    refined = [refit_spheres(m, 2 * m.max_spheres_per_link) for _, m, _, _ in arms]
    allowed = _verification_acm(refined, [c for _, _, _, c in arms])
    radii = np.concatenate([m.sphere_radii for m in refined])
    rad_sum = radii[:, None] + radii[None, :]

    per_trial = []
    first_events: list[tuple[int, int, float] | None] = []
    for log in logs:
        by_arm = {name: log.records_for(name) for name, _, _, _ in arms}
        num_ticks = max((len(v) for v in by_arm.values()), default=0)
        if num_ticks == 0:
            per_trial.append(0)
            first_events.append(None)
            continue
        # Interpolated configurations for every substep of every tick, plus
        # the final tick endpoint, evaluated with batched kinematics.
        alphas = np.arange(resolution) / resolution
        row_tick = np.repeat(np.arange(num_ticks - 1), resolution)
        row_tick = np.concatenate([row_tick, [num_ticks - 1]])
        centers_parts = []
        for k, (name, _, base, _) in enumerate(arms):
            q_arm = np.asarray([rec.q for rec in by_arm[name]])
            if num_ticks > 1:
                q_sub = (
                    q_arm[:-1, None, :] * (1.0 - alphas)[None, :, None]
                    + q_arm[1:, None, :] * alphas[None, :, None]
                ).reshape(-1, q_arm.shape[1])
                q_sub = np.concatenate([q_sub, q_arm[-1:, :]])
            else:
                q_sub = q_arm
            frames = batch_forward_kinematics(refined[k], q_sub, base)
            centers_parts.append(batch_sphere_centers(refined[k], frames))
        centers = np.concatenate(centers_parts, axis=1)  # (B, M, 3)

        colliding_ticks: set[int] = set()
        first = None
        chunk = 256
        for start in range(0, centers.shape[0], chunk):
            c = centers[start : start + chunk]
            delta = c[:, :, None, :] - c[:, None, :, :]
            gaps = np.sqrt(np.einsum("bijk,bijk->bij", delta, delta)) - rad_sum
            gaps[:, allowed] = np.inf
            row_min = gaps.min(axis=(1, 2))
            for row in np.flatnonzero(row_min < 0.0):
                tick = int(row_tick[start + row])
                colliding_ticks.add(tick)
                if first is None or tick < first[1]:
                    first = (log.trial, tick, float(row_min[row]))
        per_trial.append(len(colliding_ticks))
        first_events.append(first)
    return CollisionReport(per_trial=per_trial, first_events=first_events)


# -- metrics ---------------------------------------------------------------------


@dataclass
class ArmMetrics:
    arm: str
    pos_mean_mm: np.ndarray  # (3,) |x|,|y|,|z|
    pos_std_mm: np.ndarray
    rot_mean_mrad: np.ndarray  # (3,) |roll|,|pitch|,|yaw|
    rot_std_mrad: np.ndarray
    samples: int


@dataclass
class RunMetrics:
    scenario: str
    arms: list[ArmMetrics]
    collisions_per_trial: list[int]
    trials: int

    @property
    def mean_collisions(self) -> float:
        return float(np.mean(self.collisions_per_trial)) if self.collisions_per_trial else 0.0

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "trials": self.trials,
            "collisions_per_trial": list(map(int, self.collisions_per_trial)),
            "mean_collisions": self.mean_collisions,
            "arms": [
                {
                    "arm": m.arm,
                    "samples": m.samples,
                    "pos_mean_mm": [float(v) for v in m.pos_mean_mm],
                    "pos_std_mm": [float(v) for v in m.pos_std_mm],
                    "rot_mean_mrad": [float(v) for v in m.rot_mean_mrad],
                    "rot_std_mrad": [float(v) for v in m.rot_std_mrad],
                }
                for m in self.arms
            ],
        }


def compute_metrics(
    logs: list[TrialLog], spec: ScenarioSpec, collisions: CollisionReport | None = None
) -> RunMetrics:
    """Per-axis absolute tracking errors (mm / mrad), mean and std over all
    ticks of all trials, per controlled arm."""
    arm_metrics = []
    for arm in spec.controlled:
        pos_err = []
        rot_err = []
        for log in logs:
            for rec in log.records_for(arm.name):
                if rec.ref_position is None:
                    raise ValueError(f"record for '{arm.name}' lacks a reference waypoint")
                pos_err.append(np.abs(rec.ee_position - rec.ref_position) * 1e3)
                r_ref = matrix_from_quat(rec.ref_orientation)
                r_ee = matrix_from_quat(rec.ee_orientation)
                rot_err.append(np.abs(rotation_vector_from_matrix(r_ref @ r_ee.T)) * 1e3)
        pos = np.asarray(pos_err)
        rot = np.asarray(rot_err)
        arm_metrics.append(
            ArmMetrics(
                arm=arm.name,
                pos_mean_mm=pos.mean(axis=0),
                pos_std_mm=pos.std(axis=0),
                rot_mean_mrad=rot.mean(axis=0),
                rot_std_mrad=rot.std(axis=0),
                samples=pos.shape[0],
            )
        )
    report = collisions if collisions is not None else CollisionReport([], [])
    return RunMetrics(
        scenario=spec.name,
        arms=arm_metrics,
        collisions_per_trial=report.per_trial,
        trials=spec.trials,
    )


METRICS_CSV_HEADER = [
    "scenario",
    "arm",
    "x_mm_mean", "x_mm_std",
    "y_mm_mean", "y_mm_std",
    "z_mm_mean", "z_mm_std",
    "roll_mrad_mean", "roll_mrad_std",
    "pitch_mrad_mean", "pitch_mrad_std",
    "yaw_mrad_mean", "yaw_mrad_std",
    "collisions",
]


def write_metrics_csv(metrics: RunMetrics, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_CSV_HEADER)
        for m in metrics.arms:
            row = [metrics.scenario, m.arm]
            for axis in range(3):
                row += [f"{m.pos_mean_mm[axis]:.6f}", f"{m.pos_std_mm[axis]:.6f}"]
            for axis in range(3):
                row += [f"{m.rot_mean_mrad[axis]:.6f}", f"{m.rot_std_mrad[axis]:.6f}"]
            row.append(f"{metrics.mean_collisions:.4f}")
            writer.writerow(row)


def write_run_logs(logs: list[TrialLog], out_dir: Path, scenario_name: str) -> list[Path]:
    """One JSON-lines file per trial."""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for log in logs:
        p = out_dir / f"{scenario_name}_trial{log.trial}.jsonl"
        with open(p, "w", encoding="utf-8") as fh:
            for rec in log.records:
                fh.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")
        paths.append(p)
    return paths


def read_run_logs(paths: list[Path]) -> list[TrialLog]:
    logs = []
    for p in paths:
        records = []
        with open(p, "r", encoding="utf-8") as fh:
            for line in fh:
                d = json.loads(line)
                records.append(
                    TickRecord(
                        trial=d["trial"],
                        tick=d["tick"],
                        stamp=d["stamp"],
                        arm=d["arm"],
                        kind=d["kind"],
                        q=np.asarray(d["q"], dtype=float),
                        ee_position=np.asarray(d["ee_pos"], dtype=float),
                        ee_orientation=np.asarray(d["ee_quat"], dtype=float),
                        ref_position=None if d["ref_pos"] is None else np.asarray(d["ref_pos"]),
                        ref_orientation=(
                            None if d["ref_quat"] is None else np.asarray(d["ref_quat"])
                        ),
                        min_gap=d["min_gap"],
                        status=d["status"],
                        iterations=d["iterations"],
                    )
                )
        logs.append(TrialLog(trial=records[0].trial if records else 0, records=records,
                             solve_times=[]))
    return logs
