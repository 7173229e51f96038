"""Residual blocks for the five constraint families, with robust losses.

Every block builder accepts plain arrays for value-only evaluation or
`autodiff.Dual` inputs, in which case the block carries the exact Jacobian
w.r.t. the joint command variables. A block's squared norm s = ||r||^2 feeds
its robust loss; `apply_robust_loss` returns the loss value and the
reweighting factor used in the solver's normal equations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .geometry import matrix_from_quat, rotation_vector_from_matrix
from .kinematics import ArmState, Pose, forward_kinematics, sphere_centers_for
from .model import RobotModel
from .proximity import ActivePair

# Eq.-style collision residuals are singular at contact; below this gap the
# residual switches to a linear-in-penetration form so deeper penetration is
# always costlier than contact.
GAP_FLOOR = 1e-4

IDENTITY = "identity"
CAUCHY = "cauchy"
TUKEY = "tukey"


@dataclass(frozen=True)
class GoalSpec:
    """End-effector goal: position, orientation, or full pose target."""

    mode: str
    target: Pose
    w11: float = 1.0  # position term weight
    w12: float = 1.0  # orientation term weight

    def __post_init__(self):
        if self.mode not in ("position", "orientation", "pose"):
            raise ValueError(f"unknown goal mode '{self.mode}'")
        if self.w11 < 0 or self.w12 < 0:
            raise ValueError("goal weights must be >= 0")
        if self.mode == "position" and self.w12 != 0.0:
            raise ValueError("position goal requires w12 = 0")
        if self.mode == "orientation" and self.w11 != 0.0:
            raise ValueError("orientation goal requires w11 = 0")
        if self.mode == "pose" and not (self.w11 > 0 and self.w12 > 0):
            raise ValueError("pose goal requires positive w11 and w12")

    @classmethod
    def position(cls, target: Pose, w11: float = 1.0) -> "GoalSpec":
        return cls("position", target, w11=w11, w12=0.0)

    @classmethod
    def orientation(cls, target: Pose, w12: float = 1.0) -> "GoalSpec":
        return cls("orientation", target, w11=0.0, w12=w12)

    @classmethod
    def pose(cls, target: Pose, w11: float = 1.0, w12: float = 1.0) -> "GoalSpec":
        return cls("pose", target, w11=w11, w12=w12)


@dataclass(frozen=True)
class CostWeights:
    """Family weights and parameters of the residual blocks."""

    w_ee: float = 1.0
    w_coll: float = 5.0
    w_pref: float = 0.1
    w_poslim: float = 1.0
    w_kino: float = 1.0
    eps_coll: float = 0.01  # m
    eps_limit: float = 0.01  # rad
    q_pref: np.ndarray | None = None  # defaults to the joint-limit centers
    j_max: float = 10.0  # rad/s^3
    noise_magnitude: float = 0.002  # rad, initialization jitter
    tukey_scale: float = 0.5

    def __post_init__(self):
        for name in ("w_ee", "w_coll", "w_pref", "w_poslim", "w_kino"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.eps_coll <= 0 or self.eps_limit <= 0 or self.j_max <= 0:
            raise ValueError("eps_coll, eps_limit and j_max must be positive")
        if self.q_pref is not None:
            object.__setattr__(self, "q_pref", np.asarray(self.q_pref, dtype=float))

    def preferred_posture(self, model: RobotModel) -> np.ndarray:
        return self.q_pref if self.q_pref is not None else model.center_posture()


@dataclass
class ResidualBlock:
    label: str
    residuals: np.ndarray
    loss: str
    weight: float
    jacobian: np.ndarray | None = None
    loss_scale: float = 1.0  # Tukey's a; unused by the other losses

    @property
    def squared_norm(self) -> float:
        return float(np.dot(self.residuals, self.residuals))


def _block(label: str, vec, loss: str, weight: float, scale: float = 1.0) -> ResidualBlock:
    if isinstance(vec, ad.Dual):
        return ResidualBlock(label, vec.val, loss, weight, jacobian=vec.der, loss_scale=scale)
    return ResidualBlock(label, np.asarray(vec, dtype=float), loss, weight, loss_scale=scale)


# -- end-effector ------------------------------------------------------------


def _ee_residual_vec(position, rotation, goal: GoalSpec):
    """sqrt(w11)*(p - p_des) stacked with sqrt(w12)*rotvec(R_des @ R^T).

    Components with zero weight are structurally zero so position goals are
    exactly invariant to orientation and vice versa.
    """
    parts = []
    if goal.w11 > 0.0:
        parts.append(math.sqrt(goal.w11) * (position - goal.target.position))
    else:
        parts.append(np.zeros(3))
    if goal.w12 > 0.0:
        r_des = matrix_from_quat(goal.target.orientation)
        r_err = ad.matmul(r_des, rotation.T)
        parts.append(math.sqrt(goal.w12) * rotation_vector_from_matrix(r_err))
    else:
        parts.append(np.zeros(3))
    return ad.concat(parts)


def ee_residuals(current: Pose, goal: GoalSpec, w_ee: float = 1.0) -> ResidualBlock:
    """Pose-error block (6 components) from an already-computed pose."""
    vec = _ee_residual_vec(current.position, matrix_from_quat(current.orientation), goal)
    return _block("ee", vec, IDENTITY, w_ee)


# -- collision ---------------------------------------------------------------


def _collision_residual(gap, eps_coll: float):
    g = float(ad.value_of(gap))
    if g >= GAP_FLOOR:
        return eps_coll / gap
    if g >= 0.0:
        return eps_coll / GAP_FLOOR  # constant inside the clamp band
    return (eps_coll / GAP_FLOOR) * (1.0 - gap / GAP_FLOOR)


def collision_residuals(
    active: list[ActivePair], eps_coll: float, w_coll: float = 1.0, centers: dict | None = None
) -> ResidualBlock:
    """One eps/gap residual per active pair.

    `centers` optionally maps object ids to (possibly Dual) recomputed world
    centers; ids absent from the map keep their snapshot position, so only
    controlled-arm spheres move with the command variables. All pairs are
    evaluated in one vectorized pass.
    """
    p = len(active)
    if p == 0:
        return _block("collision", np.zeros(0), IDENTITY, w_coll)
    nvars = None
    if centers:
        for c in centers.values():
            if isinstance(c, ad.Dual):
                nvars = c.nvars
                break
    a_val = np.empty((p, 3))
    b_val = np.empty((p, 3))
    rsum = np.empty(p)
    a_der = np.zeros((p, 3, nvars)) if nvars is not None else None
    b_der = np.zeros((p, 3, nvars)) if nvars is not None else None
    for i, pair in enumerate(active):
        c_a = centers.get(pair.id_a, pair.center_a) if centers else pair.center_a
        c_b = centers.get(pair.id_b, pair.center_b) if centers else pair.center_b
        rsum[i] = pair.r_a + pair.r_b
        if isinstance(c_a, ad.Dual):
            a_val[i] = c_a.val
            a_der[i] = c_a.der
        else:
            a_val[i] = c_a
        if isinstance(c_b, ad.Dual):
            b_val[i] = c_b.val
            b_der[i] = c_b.der
        else:
            b_val[i] = c_b

    delta = a_val - b_val
    dist = np.sqrt(np.maximum(np.einsum("pi,pi->p", delta, delta), 1e-24))
    gap = dist - rsum
    floor_scale = eps_coll / GAP_FLOOR
    near = gap >= GAP_FLOOR
    clamped = (gap >= 0.0) & ~near
    res = np.where(near, eps_coll / np.where(near, gap, 1.0),
                   np.where(clamped, floor_scale, floor_scale * (1.0 - gap / GAP_FLOOR)))
    if nvars is None:
        return _block("collision", res, IDENTITY, w_coll)
    # d(residual)/d(gap), zero inside the clamp band
    dres_dgap = np.where(
        near, -eps_coll / np.where(near, gap * gap, 1.0),
        np.where(clamped, 0.0, -floor_scale / GAP_FLOOR),
    )
    ddist = np.einsum("pi,pin->pn", delta, a_der - b_der) / dist[:, None]
    return ResidualBlock(
        "collision", res, IDENTITY, w_coll, jacobian=dres_dgap[:, None] * ddist
    )


# -- preferred posture ---------------------------------------------------------


def preferred_position_residuals(q_cmd, q_pref: np.ndarray, w_pref: float) -> ResidualBlock:
    q_pref = np.asarray(q_pref, dtype=float)
    if ad.value_of(q_cmd).shape != q_pref.shape:
        raise ValueError("q_cmd and q_pref lengths differ")
    return _block("preferred", q_cmd - q_pref, CAUCHY, w_pref)


# -- joint limits --------------------------------------------------------------


def _safe_inverse_den(den):
    """Nudge near-zero denominators away from the pole (keeps values finite)."""
    v = ad.value_of(den)
    tiny = 1e-12
    bad = np.abs(v) < tiny
    if np.any(bad):
        sign = np.where(v >= 0.0, 1.0, -1.0)
        den = den + np.where(bad, sign * tiny - v, 0.0)
    return den


def joint_limit_residuals(
    q_cmd, q_lower: np.ndarray, q_upper: np.ndarray, eps_limit: float, w_poslim: float = 1.0
) -> ResidualBlock:
    """Barrier residuals eps/(q - q_l - eps) and eps/(q - q_u - eps), stacked."""
    r_l = eps_limit / _safe_inverse_den(q_cmd - q_lower - eps_limit)
    r_u = eps_limit / _safe_inverse_den(q_cmd - q_upper - eps_limit)
    return _block("joint_limits", ad.concat([r_l, r_u]), IDENTITY, w_poslim)


# -- kinodynamic ----------------------------------------------------------------


def kinodynamic_residuals(
    q_cmd,
    state: ArmState,
    dt: float,
    vel_limits: np.ndarray,
    acc_limits: np.ndarray,
    j_max: float,
    w_kino: float = 1.0,
    tukey_scale: float = 0.5,
) -> ResidualBlock:
    """Hinge residuals on predicted velocity/acceleration/jerk excess plus the
    raw joint displacement, under a Tukey loss.

    The predictions treat q_cmd as the next history entry; orders the history
    cannot support yet contribute zeros.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = state.q.shape[0]
    hist = [q for _, q in state.history]  # most recent first
    q1 = state.q
    disp = q_cmd - q1
    qdot = disp / dt
    v_exc = ad.hinge(ad.absolute(qdot) - vel_limits)
    if len(hist) >= 1:
        qddot = (q_cmd - 2.0 * q1 + hist[0]) / dt**2
        a_exc = ad.hinge(ad.absolute(qddot) - acc_limits)
    else:
        a_exc = np.zeros(n)
    if len(hist) >= 2:
        qdddot = (q_cmd - 3.0 * q1 + 3.0 * hist[0] - hist[1]) / dt**3
        j_exc = ad.hinge(ad.absolute(qdddot) - j_max)
    else:
        j_exc = np.zeros(n)
    vec = ad.concat([v_exc, a_exc, j_exc, disp])
    return _block("kinodynamic", vec, TUKEY, w_kino, scale=tukey_scale)


# -- robust losses ---------------------------------------------------------------


def apply_robust_loss(block: ResidualBlock) -> tuple[float, float]:
    """Loss value rho(s) and the IRLS reweighting factor for s = ||r||^2.

    identity: rho = s, weight 1. cauchy: rho = log(1+s), weight 1/(1+s).
    tukey(a): rho = (a^2/6)(1 - (1 - s/a^2)^3) capped at a^2/6, weight
    (1 - s/a^2)^2 and 0 past the cap. All weights equal 1 at s = 0.
    """
    s = block.squared_norm
    if block.loss == IDENTITY:
        return s, 1.0
    if block.loss == CAUCHY:
        return math.log1p(s), 1.0 / (1.0 + s)
    if block.loss == TUKEY:
        a_sq = block.loss_scale**2
        if s >= a_sq:
            return a_sq / 6.0, 0.0
        u = 1.0 - s / a_sq
        return (a_sq / 6.0) * (1.0 - u**3), u * u
    raise ValueError(f"unknown loss '{block.loss}'")


def total_cost(blocks: list[ResidualBlock]) -> float:
    """Weighted robust objective: sum_k w_k * rho_k(||r_k||^2)."""
    return sum(b.weight * apply_robust_loss(b)[0] for b in blocks)


def cost_breakdown(blocks: list[ResidualBlock]) -> dict[str, float]:
    return {b.label: b.weight * apply_robust_loss(b)[0] for b in blocks}


# -- full evaluation --------------------------------------------------------------


@dataclass
class CostContext:
    """Everything needed to evaluate the objective at a candidate command."""

    model: RobotModel
    goal: GoalSpec
    weights: CostWeights
    state: ArmState
    dt: float
    pairs: list[ActivePair] = field(default_factory=list)

    def __post_init__(self):
        self.q_pref = self.weights.preferred_posture(self.model)
        # Controlled-arm sphere ids (scene ids < num_spheres) must be
        # recomputed from the command variables each evaluation.
        own = self.model.num_spheres
        self.moving_ids = sorted(
            {p.id_a for p in self.pairs} | {p.id_b for p in self.pairs if p.id_b < own}
        )


def evaluate_cost_blocks(q, ctx: CostContext) -> list[ResidualBlock]:
    """All residual blocks at q; exact Jacobians when q is a Dual seed."""
    w = ctx.weights
    frames = forward_kinematics(ctx.model, q)
    ee = frames[ctx.model.ee_index]
    blocks = [_block("ee", _ee_residual_vec(ee.t, ee.R, ctx.goal), IDENTITY, w.w_ee)]
    if ctx.pairs:
        centers = sphere_centers_for(ctx.model, frames, ctx.moving_ids)
        blocks.append(collision_residuals(ctx.pairs, w.eps_coll, w.w_coll, centers))
    blocks.append(preferred_position_residuals(q, ctx.q_pref, w.w_pref))
    blocks.append(
        joint_limit_residuals(q, ctx.model.q_lower, ctx.model.q_upper, w.eps_limit, w.w_poslim)
    )
    blocks.append(
        kinodynamic_residuals(
            q,
            ctx.state,
            ctx.dt,
            ctx.model.vel_limits,
            ctx.model.acc_limits,
            w.j_max,
            w.w_kino,
            w.tukey_scale,
        )
    )
    return blocks
