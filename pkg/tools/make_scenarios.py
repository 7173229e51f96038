"""Author the shipped scenario corpus: settle start postures, write configs
and external-arm trajectory files into src/dawnik/data/.

Run from the repository root:

    python tools/make_scenarios.py [--check]

The start posture of every controlled arm is settled with the solver itself
(large dt, no noise) so the first waypoint coincides with the arm's
end-effector at t=0 and runs start transient-free. Settled joint vectors are
frozen into the config files; this script is the reproducible source of the
corpus, not part of the installed package.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from dawnik.costs import CostWeights, GoalSpec  # noqa: E402
from dawnik.geometry import Transform, matrix_from_quat, quat_from_matrix, rpy_matrix  # noqa: E402
from dawnik.kinematics import ArmState, Pose, end_effector_pose  # noqa: E402
from dawnik.model import load_robot_model  # noqa: E402
from dawnik.paths import PathSpec, generate_path  # noqa: E402
from dawnik.solver import SolveRequest, SolverConfig, solve  # noqa: E402

DATA = ROOT / "src" / "dawnik" / "data"
MODELS = DATA / "models"
SCENARIOS = DATA / "scenarios"
TRAJECTORIES = DATA / "trajectories"

# Fixed goal orientations (world frame), per drawing plane.
TOOL_XY = quat_from_matrix(rpy_matrix(0.0, np.pi / 3, 0.0))  # 60 deg down-forward
TOOL_YZ = np.array([1.0, 0.0, 0.0, 0.0])  # tool along +x (whiteboard pose)

GOAL_W = 400.0  # w11 = w12 for all shipped goals


def settle_posture(model, base: Transform, target: Pose, template, rounds: int = 40,
                   attempts: int = 8):
    """Drive the arm onto the target pose with repeated large-step solves.

    The first joint of both arms is a base yaw, so each attempt seeds it with
    the bearing toward the target and perturbs the remaining template joints;
    solutions riding joint limits score badly and trigger a restart.
    """
    inv = base.inverse()
    local = Pose(inv.apply(target.position),
                 quat_from_matrix(np.asarray(inv.R) @ matrix_from_quat(target.orientation)))
    bearing = float(np.arctan2(local.position[1], local.position[0]))
    weights = CostWeights(noise_magnitude=0.0)
    goal = GoalSpec.pose(local, w11=GOAL_W, w12=GOAL_W)
    rng = np.random.default_rng(12345)

    best_q, best_err, best_score = None, np.inf, np.inf
    for attempt in range(attempts):
        q = np.asarray(template, dtype=float).copy()
        q[0] = bearing
        if attempt > 0:
            q[1:] += rng.normal(0.0, 0.15, q.shape[0] - 1)
            q[0] += rng.normal(0.0, 0.1)
        q = np.clip(q, model.q_lower + 0.1, model.q_upper - 0.1)
        for _ in range(rounds):
            res = solve(
                SolveRequest(model=model, state=ArmState(q=q, stamp=0.0), goal=goal, dt=1.0,
                             weights=weights, solver=SolverConfig(max_iterations=100)),
                None,
            )
            if np.max(np.abs(res.q_cmd - q)) < 1e-12:
                q = res.q_cmd
                break
            q = res.q_cmd
        pose = end_effector_pose(model, q, base)
        err = float(np.linalg.norm(pose.position - target.position))
        margin = float(np.min(np.minimum(q - model.q_lower, model.q_upper - q)))
        score = err + max(0.0, 0.25 - margin)
        if score < best_score:
            best_q, best_err, best_score = q, err, score
        if err < 1.5e-3 and margin > 0.25:
            break
    return best_q, best_err


def first_waypoint(path: PathSpec) -> np.ndarray:
    return generate_path(path)[0].position


def path_dict(path: PathSpec) -> dict:
    return {
        "shape": path.shape,
        "plane": path.plane,
        "center": [round(float(v), 6) for v in path.center],
        "size": path.size,
        "duration": path.duration,
        "sample_period": path.sample_period,
    }


def controlled_entry(name, model_file, base_xyz, base_yaw, q0, path, orientation):
    return {
        "name": name,
        "model": model_file,
        "base": {"xyz": list(base_xyz), "rpy": [0.0, 0.0, base_yaw]},
        "q0": [round(float(v), 10) for v in q0],
        "path": path_dict(path),
        "goal": {
            "mode": "pose",
            "w11": GOAL_W,
            "w12": GOAL_W,
            "orientation": [round(float(v), 12) for v in orientation],
        },
    }


def write_config(name, scenario_id, duration, controlled, externals, seed):
    doc = {
        "id": scenario_id,
        "name": name,
        "duration": duration,
        "tick_rate": 100.0,
        "trials": 5,
        "seed": seed,
        "expect_no_collisions": True,
        "proximity": {"activation_distance": 0.10, "inflation": 0.10, "max_pairs": 32},
        "controlled": controlled,
        "externals": externals,
    }
    path = SCENARIOS / f"{name}.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return path


def write_trajectory(name: str, stamps: np.ndarray, qs: np.ndarray) -> str:
    TRAJECTORIES.mkdir(parents=True, exist_ok=True)
    path = TRAJECTORIES / f"{name}.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# stamp, q_1..q_%d\n" % qs.shape[1])
        for t, q in zip(stamps, qs):
            fh.write(",".join([f"{t:.6f}"] + [f"{v:.8f}" for v in q]) + "\n")
    return path.name


# -- external trajectories -------------------------------------------------------


def s2_sweep_trajectory() -> str:
    """S7 repeatedly extends toward the controlled workspace and retracts."""
    period = 4.0
    stamps = np.arange(0.0, period + 1e-9, 0.02)
    qs = np.zeros((len(stamps), 7))
    phase = 2 * np.pi * stamps / period
    qs[:, 1] = 0.65 + 0.45 * np.sin(phase)  # shoulder pitch
    qs[:, 3] = 0.55 - 0.50 * np.sin(phase)  # elbow
    qs[:, 5] = 0.35 + 0.15 * np.sin(phase)  # wrist pitch
    qs[-1] = qs[0]  # closed loop
    return write_trajectory("s2_sweep", stamps, qs)


def s3_dual_trajectories() -> tuple[str, str]:
    """Two phase-offset reach/retreat cycles crossing the shared workspace."""
    period = 5.0
    stamps = np.arange(0.0, period + 1e-9, 0.02)
    phase = 2 * np.pi * stamps / period

    left = np.zeros((len(stamps), 7))
    left[:, 0] = 0.25 * np.sin(phase)
    left[:, 1] = 0.75 + 0.40 * np.sin(phase)
    left[:, 3] = 0.50 - 0.45 * np.sin(phase)
    left[-1] = left[0]

    right = np.zeros((len(stamps), 7))
    right[:, 0] = -0.25 * np.sin(phase + np.pi / 2)
    right[:, 1] = 0.75 + 0.40 * np.sin(phase + np.pi / 2)
    right[:, 3] = 0.50 - 0.45 * np.sin(phase + np.pi / 2)
    right[-1] = right[0]
    return write_trajectory("s3_left", stamps, left), write_trajectory("s3_right", stamps, right)


# -- corpus ----------------------------------------------------------------------


def build(check: bool) -> int:
    SCENARIOS.mkdir(parents=True, exist_ok=True)
    s6 = load_robot_model(MODELS / "s6.json")
    s7 = load_robot_model(MODELS / "s7.json")
    identity = Transform.identity()

    seeds_xy = np.array([0.0, -0.7, 1.3, 0.0, 0.447, 0.0])
    seeds_yz = np.array([0.0, -0.6, 1.3, 0.0, -0.7, 0.0])
    # settle_posture overrides the yaw entry with the target bearing

    # S1: single S6, all shapes in both planes plus a hold pose.
    s1_paths = {
        "s1_square_xy": PathSpec("square", "XY", [0.38, 0.0, 0.25], 0.40, 12.0),
        "s1_circle_xy": PathSpec("circle", "XY", [0.40, 0.0, 0.25], 0.18, 9.0),
        "s1_eight_xy": PathSpec("eight", "XY", [0.40, 0.0, 0.25], 0.10, 9.0),
        "s1_square_yz": PathSpec("square", "YZ", [0.42, 0.0, 0.45], 0.40, 12.0),
        "s1_circle_yz": PathSpec("circle", "YZ", [0.42, 0.0, 0.45], 0.18, 9.0),
        "s1_eight_yz": PathSpec("eight", "YZ", [0.42, 0.0, 0.45], 0.10, 9.0),
        "s1_hold": PathSpec("hold", "XY", [0.45, 0.10, 0.40], 0.10, 5.0),
    }
    failures = []
    for name, path in s1_paths.items():
        tool = TOOL_XY if path.plane == "XY" else TOOL_YZ
        seed_q = seeds_xy if path.plane == "XY" else seeds_yz
        if path.shape == "hold":
            tool = TOOL_YZ
            seed_q = seeds_yz
        q0, err = settle_posture(s6, identity, Pose(first_waypoint(path), tool), seed_q)
        print(f"{name}: start-pose error {err * 1e3:.3f} mm")
        if err > 3e-3:
            failures.append(name)
        entry = controlled_entry("s6", "s6.json", [0, 0, 0], 0.0, q0, path, tool)
        write_config(name, "S1", path.duration, [entry], [], seed=101)

    # S2: same tasks with an interfering external S7.
    s2_base = [0.95, 0.0, 0.0]
    s2_traj = s2_sweep_trajectory()
    for name, path in {
        "s2_square_xy": PathSpec("square", "XY", [0.38, 0.0, 0.25], 0.40, 12.0),
        "s2_circle_yz": PathSpec("circle", "YZ", [0.42, 0.0, 0.45], 0.18, 9.0),
        "s2_eight_yz": PathSpec("eight", "YZ", [0.42, 0.0, 0.45], 0.10, 9.0),
    }.items():
        tool = TOOL_XY if path.plane == "XY" else TOOL_YZ
        seed_q = seeds_xy if path.plane == "XY" else seeds_yz
        q0, err = settle_posture(s6, identity, Pose(first_waypoint(path), tool), seed_q)
        print(f"{name}: start-pose error {err * 1e3:.3f} mm")
        if err > 3e-3:
            failures.append(name)
        entry = controlled_entry("s6", "s6.json", [0, 0, 0], 0.0, q0, path, tool)
        ext = [{"name": "s7_ext", "model": "s7.json",
                "base": {"xyz": s2_base, "rpy": [0.0, 0.0, np.pi]},
                "trajectory": s2_traj}]
        write_config(name, "S2", path.duration, [entry], ext, seed=202)

    # S3: two external arms sweeping the shared workspace; no squares.
    left_name, right_name = s3_dual_trajectories()
    yaw_l = float(np.arctan2(-0.45, -0.35))
    yaw_r = float(np.arctan2(0.45, -0.35))
    s3_ext = [
        {"name": "s7_left", "model": "s7.json",
         "base": {"xyz": [0.75, 0.45, 0.0], "rpy": [0.0, 0.0, yaw_l]},
         "trajectory": left_name},
        {"name": "s7_right", "model": "s7.json",
         "base": {"xyz": [0.75, -0.45, 0.0], "rpy": [0.0, 0.0, yaw_r]},
         "trajectory": right_name},
    ]
    for name, path in {
        "s3_hold": PathSpec("hold", "XY", [0.45, 0.10, 0.40], 0.10, 6.0),
        "s3_circle_yz": PathSpec("circle", "YZ", [0.42, 0.0, 0.45], 0.18, 9.0),
        "s3_eight_yz": PathSpec("eight", "YZ", [0.42, 0.0, 0.45], 0.10, 9.0),
    }.items():
        tool = TOOL_YZ
        q0, err = settle_posture(s6, identity, Pose(first_waypoint(path), tool), seeds_yz)
        print(f"{name}: start-pose error {err * 1e3:.3f} mm")
        if err > 3e-3:
            failures.append(name)
        entry = controlled_entry("s6", "s6.json", [0, 0, 0], 0.0, q0, path, tool)
        write_config(name, "S3", path.duration, [entry], s3_ext, seed=303)

    # S4: S6 and S7 both solver-controlled in the same workspace. The S7
    # always traces the YZ square; the S6 varies.
    s7_base = Transform(rpy_matrix(0, 0, np.pi), np.array([0.90, 0.0, 0.0]))
    s7_square = PathSpec("square", "YZ", [0.48, 0.0, 0.45], 0.40, 10.0)
    s7_tool = quat_from_matrix(rpy_matrix(0.0, 0.0, np.pi))  # tool along -x
    s7_seed = np.array([0.0, 0.55, 0.0, -1.15, 0.0, 0.62, 0.0])
    q7, err7 = settle_posture(s7, s7_base, Pose(first_waypoint(s7_square), s7_tool), s7_seed)
    print(f"s4 s7 square: start-pose error {err7 * 1e3:.3f} mm")
    if err7 > 3e-3:
        failures.append("s4_s7")
    s7_entry = controlled_entry("s7", "s7.json", [0.90, 0.0, 0.0], np.pi, q7, s7_square, s7_tool)

    for name, path in {
        "s4_square_yz": PathSpec("square", "YZ", [0.42, 0.0, 0.45], 0.40, 10.0),
        "s4_eight_yz": PathSpec("eight", "YZ", [0.42, 0.0, 0.45], 0.10, 10.0),
    }.items():
        q0, err = settle_posture(s6, identity, Pose(first_waypoint(path), TOOL_YZ), seeds_yz)
        print(f"{name}: start-pose error {err * 1e3:.3f} mm")
        if err > 3e-3:
            failures.append(name)
        s6_entry = controlled_entry("s6", "s6.json", [0, 0, 0], 0.0, q0, path, TOOL_YZ)
        write_config(name, "S4", path.duration, [s6_entry, s7_entry], [], seed=404)

    if failures:
        print(f"FAILED start poses: {failures}")
        return 1
    print(f"corpus written to {SCENARIOS}")
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--check", action="store_true", help="fail on imperfect start poses")
    sys.exit(build(check=ap.parse_args().check))
