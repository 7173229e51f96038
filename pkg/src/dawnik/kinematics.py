"""Forward kinematics, collision-sphere placement, and derivative estimation.

All functions are pure. `forward_kinematics` and the sphere-center helpers
accept either a plain joint vector or an `autodiff.Dual` seed, in which case
every downstream quantity carries exact derivatives w.r.t. the joints.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from .geometry import Transform, normalize_quat, quat_from_matrix, rotation_from_basis
from .model import RobotModel


@dataclass(frozen=True)
class Pose:
    """Position plus hemisphere-normalized unit quaternion [w, x, y, z]."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "orientation", normalize_quat(self.orientation))


@dataclass(frozen=True)
class Derivatives:
    qdot: np.ndarray
    qddot: np.ndarray
    qdddot: np.ndarray
    warmup: bool  # True when the history was too short for some order


@dataclass(frozen=True)
class ArmState:
    """Joint state plus the command history backing derivative estimates.

    `history` holds the last three commanded positions, most recent first,
    as (stamp, q) pairs. The derivative fields are the filtered estimates.
    """

    q: np.ndarray
    stamp: float
    history: tuple[tuple[float, np.ndarray], ...] = ()
    qdot: np.ndarray | None = None
    qddot: np.ndarray | None = None
    qdddot: np.ndarray | None = None

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        object.__setattr__(self, "q", q)
        n = q.shape[0]
        for name in ("qdot", "qddot", "qdddot"):
            v = getattr(self, name)
            object.__setattr__(
                self, name, np.zeros(n) if v is None else np.asarray(v, dtype=float)
            )
        stamps = [s for s, _ in self.history]
        if any(b <= a for a, b in zip(stamps[::-1], stamps[::-1][1:])):
            raise ValueError("history stamps must be strictly increasing")

    @property
    def command_sequence(self) -> list[np.ndarray]:
        """Commands oldest-to-newest, ending with the current position."""
        return [q for _, q in self.history[::-1]] + [self.q]


@dataclass(frozen=True)
class WorldSpheres:
    """Flat snapshot of collision spheres (one entry per decomposition sphere)."""

    ids: np.ndarray  # (M,) object ids
    centers: np.ndarray  # (M, 3)
    radii: np.ndarray  # (M,)
    owners: np.ndarray  # (M,) owning arm index
    link_idx: np.ndarray  # (M,) link index within the owning arm

    @property
    def count(self) -> int:
        return self.ids.shape[0]


def forward_kinematics(model: RobotModel, q, base: Transform | None = None) -> list[Transform]:
    """Link transforms along the chain; entry k is the frame of links[k].

    Joint k's local transform is the axis rotation followed by the origin
    offset, so a revolute joint pivots at the parent link's frame and each
    link frame sits at its distal end. A Dual q yields frames carrying exact
    derivatives (via a fused path that exploits each joint's dependence on a
    single variable).
    """
    if isinstance(q, ad.Dual):
        if q.val.shape[0] != model.n:
            raise ValueError(f"expected {model.n} joint values, got {q.val.shape[0]}")
        return _forward_kinematics_dual(model, q.val, base)
    q = np.asarray(q, dtype=float)
    if q.shape[0] != model.n:
        raise ValueError(f"expected {model.n} joint values, got {q.shape[0]}")
    tf = base if base is not None else Transform.identity()
    frames = [tf]
    qi = 0
    for joint in model.joints:
        if joint.kind == "revolute":
            spin = tf.R @ rotation_from_basis(joint.rot_basis, q[qi])
            rot = spin if joint.origin_rot_identity else spin @ np.asarray(joint.origin.R)
            tf = Transform(rot, spin @ np.asarray(joint.origin.t) + tf.t)
            qi += 1
        else:
            tf = tf.compose(joint.origin)
        frames.append(tf)
    return frames


def _forward_kinematics_dual(
    model: RobotModel, q: np.ndarray, base: Transform | None
) -> list[Transform]:
    """Chain-rule FK on raw (value, derivative) arrays.

    Each joint rotation depends on one variable only, so its derivative
    enters a single column of the accumulated (3, 3, n) array instead of a
    full dual-matrix product.
    """
    n = q.shape[0]
    if base is None:
        rv, tv = np.eye(3), np.zeros(3)
    else:
        rv, tv = np.asarray(base.R, dtype=float), np.asarray(base.t, dtype=float)
    rd = np.zeros((3, 3, n))
    td = np.zeros((3, n))
    frames = [Transform(ad.Dual(rv, rd), ad.Dual(tv, td))]
    qi = 0
    for joint in model.joints:
        if joint.kind == "revolute":
            outer, cos_basis, skew = joint.rot_basis
            c, s = np.cos(q[qi]), np.sin(q[qi])
            rot_j = outer + c * cos_basis + s * skew
            drot_j = c * skew - s * cos_basis
            spin_v = rv @ rot_j
            spin_d = (rd.transpose(2, 0, 1) @ rot_j).transpose(1, 2, 0)
            spin_d[:, :, qi] += rv @ drot_j
            origin_t = np.asarray(joint.origin.t)
            tv = spin_v @ origin_t + tv
            td = (spin_d.transpose(2, 0, 1) @ origin_t).T + td
            if joint.origin_rot_identity:
                rv, rd = spin_v, spin_d
            else:
                origin_r = np.asarray(joint.origin.R)
                rv = spin_v @ origin_r
                rd = (spin_d.transpose(2, 0, 1) @ origin_r).transpose(1, 2, 0)
            qi += 1
        else:
            origin_t = np.asarray(joint.origin.t)
            tv = rv @ origin_t + tv
            td = (rd.transpose(2, 0, 1) @ origin_t).T + td
            if not joint.origin_rot_identity:
                origin_r = np.asarray(joint.origin.R)
                rv = rv @ origin_r
                rd = (rd.transpose(2, 0, 1) @ origin_r).transpose(1, 2, 0)
        frames.append(Transform(ad.Dual(rv, rd), ad.Dual(tv, td)))
    return frames


def end_effector_transform(model: RobotModel, q, base: Transform | None = None) -> Transform:
    return forward_kinematics(model, q, base)[model.ee_index]


def end_effector_pose(model: RobotModel, q: np.ndarray, base: Transform | None = None) -> Pose:
    tf = end_effector_transform(model, np.asarray(q, dtype=float), base)
    return Pose(np.asarray(tf.t), quat_from_matrix(np.asarray(tf.R)))


def sphere_world_positions(
    model: RobotModel,
    q: np.ndarray,
    base: Transform | None = None,
    arm_index: int = 0,
    id_offset: int = 0,
) -> WorldSpheres:
    """Place every decomposition sphere of one arm into the base/world frame."""
    frames = forward_kinematics(model, np.asarray(q, dtype=float), base)
    centers = np.empty((model.num_spheres, 3))
    for link_idx in range(len(model.links)):
        mask = model.sphere_link == link_idx
        if mask.any():
            centers[mask] = frames[link_idx].apply_points(model.sphere_centers[mask])
    return WorldSpheres(
        ids=np.arange(model.num_spheres) + id_offset,
        centers=centers,
        radii=model.sphere_radii.copy(),
        owners=np.full(model.num_spheres, arm_index, dtype=int),
        link_idx=model.sphere_link.copy(),
    )


def sphere_centers_for(model: RobotModel, frames: list[Transform], sphere_ids) -> dict:
    """Centers of selected spheres (model-local ids) from precomputed frames.

    Returns a dict id -> 3-vector; Dual when the frames carry derivatives.
    """
    out = {}
    by_link: dict[int, list[int]] = {}
    for sid in sphere_ids:
        by_link.setdefault(int(model.sphere_link[sid]), []).append(int(sid))
    for link_idx, sids in by_link.items():
        pts = model.sphere_centers[sids]
        world = frames[link_idx].apply_points(pts)
        for row, sid in enumerate(sids):
            out[sid] = world[row]
    return out


def combine_spheres(parts: list[WorldSpheres]) -> WorldSpheres:
    """Merge per-arm snapshots into one scene snapshot with contiguous ids."""
    offset = 0
    ids = []
    for p in parts:
        ids.append(np.arange(p.count) + offset)
        offset += p.count
    return WorldSpheres(
        ids=np.concatenate(ids),
        centers=np.concatenate([p.centers for p in parts]),
        radii=np.concatenate([p.radii for p in parts]),
        owners=np.concatenate([p.owners for p in parts]),
        link_idx=np.concatenate([p.link_idx for p in parts]),
    )


def batch_forward_kinematics(
    model: RobotModel, Q: np.ndarray, base: Transform | None = None
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Link frames for a batch of configurations Q of shape (B, n).

    Returns one (R: (B,3,3), t: (B,3)) pair per link. Value-only (no
    derivatives); used by the offline collision verifier where thousands of
    interpolated configurations are checked at once.
    """
    Q = np.asarray(Q, dtype=float)
    b = Q.shape[0]
    if base is None:
        R = np.broadcast_to(np.eye(3), (b, 3, 3)).copy()
        t = np.zeros((b, 3))
    else:
        R = np.broadcast_to(np.asarray(base.R), (b, 3, 3)).copy()
        t = np.broadcast_to(np.asarray(base.t), (b, 3)).copy()
    frames = [(R, t)]
    qi = 0
    for joint in model.joints:
        if joint.kind == "revolute":
            outer, cos_basis, skew = joint.rot_basis
            ang = Q[:, qi]
            rj = (
                outer
                + np.cos(ang)[:, None, None] * cos_basis
                + np.sin(ang)[:, None, None] * skew
            )
            spin = R @ rj
            R = spin if joint.origin_rot_identity else spin @ np.asarray(joint.origin.R)
            t = spin @ np.asarray(joint.origin.t) + t
            qi += 1
        else:
            t = R @ np.asarray(joint.origin.t) + t
            R = R @ np.asarray(joint.origin.R)
        frames.append((R, t))
    return frames


def batch_sphere_centers(model: RobotModel, frames) -> np.ndarray:
    """World centers (B, S, 3) of all decomposition spheres from batch frames."""
    b = frames[0][0].shape[0]
    out = np.empty((b, model.num_spheres, 3))
    for link_idx in range(len(model.links)):
        mask = model.sphere_link == link_idx
        if mask.any():
            R, t = frames[link_idx]
            out[:, mask, :] = np.einsum("bij,kj->bki", R, model.sphere_centers[mask]) + t[:, None, :]
    return out


def backward_difference_derivatives(sequence, dt: float) -> Derivatives:
    """Velocity/acceleration/jerk from a command sequence (oldest first).

    Implements the cascaded backward differences
    qdot_t = (q_t - q_{t-1}) / dt, qddot_t = (qdot_t - qdot_{t-1}) / dt,
    qdddot_t = (qddot_t - qddot_{t-1}) / dt. Orders the sequence is too
    short for are reported as zero and flagged as warm-up.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    qs = [np.asarray(q, dtype=float) for q in sequence]
    if not qs:
        raise ValueError("empty command sequence")
    n = qs[-1].shape[0]
    zero = np.zeros(n)
    # Cascaded first differences (exact zeros for constant sequences).
    vel = [(qs[i + 1] - qs[i]) / dt for i in range(len(qs) - 1)]
    acc = [(vel[i + 1] - vel[i]) / dt for i in range(len(vel) - 1)]
    jerk = [(acc[i + 1] - acc[i]) / dt for i in range(len(acc) - 1)]
    return Derivatives(
        vel[-1] if vel else zero.copy(),
        acc[-1] if acc else zero.copy(),
        jerk[-1] if jerk else zero.copy(),
        warmup=len(qs) < 4,
    )


def filter_derivatives(raw: np.ndarray, previous_filtered: np.ndarray, alpha: float):
    """Single-pole exponential moving average: alpha*raw + (1-alpha)*previous."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    return alpha * np.asarray(raw, dtype=float) + (1.0 - alpha) * np.asarray(
        previous_filtered, dtype=float
    )


DEFAULT_FILTER_ALPHA = 0.5


def advance_state(
    state: ArmState, q_cmd: np.ndarray, stamp: float, dt: float, alpha: float = DEFAULT_FILTER_ALPHA
) -> ArmState:
    """Commit a command: shift history, re-estimate and filter derivatives."""
    q_cmd = np.asarray(q_cmd, dtype=float)
    history = ((state.stamp, state.q),) + state.history[:2]
    seq = [q for _, q in history[::-1]] + [q_cmd]
    raw = backward_difference_derivatives(seq, dt)
    return replace(
        state,
        q=q_cmd,
        stamp=stamp,
        history=history,
        qdot=filter_derivatives(raw.qdot, state.qdot, alpha),
        qddot=filter_derivatives(raw.qddot, state.qddot, alpha),
        qdddot=filter_derivatives(raw.qdddot, state.qdddot, alpha),
    )
