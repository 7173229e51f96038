"""Bound-constrained trust-region Levenberg-Marquardt over joint commands.

One call per control tick: the proximity pipeline runs once on the entry
state, the active pair set stays fixed through the inner iterations, and the
trust-region radius is tied to the jerk-limited maximum joint displacement.
Bounds hold exactly on every returned command (trial points are projected;
the joint-limit barrier keeps iterates interior).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .costs import (
    CostContext,
    CostWeights,
    GoalSpec,
    apply_robust_loss,
    cost_breakdown,
    evaluate_cost_blocks,
    total_cost,
)
from .kinematics import ArmState, WorldSpheres, combine_spheres, sphere_world_positions
from .model import AllowedCollisionMatrix, RobotModel, acm_from_owners
from .proximity import ProximityConfig, find_active_pairs

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"
INFEASIBLE_START = "infeasible_start"


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 50
    step_tol: float = 1e-7  # converged when the accepted step's inf-norm drops below
    cost_tol: float = 1e-9  # ... or the relative cost decrease does
    grad_tol: float = 1e-10  # ... or the gradient inf-norm does
    lambda_init: float = 1e-4
    lambda_min: float = 1e-9
    lambda_max: float = 1e9
    lambda_up: float = 2.0  # multiplier on rejected steps
    lambda_down: float = 3.0  # divisor on accepted steps
    radius_cap: float = 0.5  # rad; governs the radius when j_max is huge


@dataclass
class TrustRegionState:
    """Damping plus the per-joint step box.

    `radius` is a vector: each joint's step is capped by its own jerk-derived
    displacement budget, so a parked joint does not freeze the others.
    """

    lam: float
    radius: np.ndarray
    accepted: int = 0
    rejected: int = 0


@dataclass
class SolveRequest:
    model: RobotModel
    state: ArmState
    goal: GoalSpec
    dt: float
    weights: CostWeights = field(default_factory=CostWeights)
    snapshot: WorldSpheres | None = None  # external arms' spheres, base frame
    snapshot_stamp: float | None = None
    acm: AllowedCollisionMatrix | None = None  # synthesized when omitted
    proximity: ProximityConfig = field(default_factory=ProximityConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)


@dataclass
class SolveResult:
    q_cmd: np.ndarray
    status: str
    iterations: int
    cost_breakdown: dict[str, float]
    wall_time: float
    total_cost: float
    min_gap: float | None  # smallest active-pair gap at the entry state
    active_pair_count: int
    active_pairs: list | None = None
    accepted_steps: int = 0
    rejected_steps: int = 0


def initialize_variables(
    q_curr: np.ndarray,
    noise_magnitude: float,
    rng: np.random.Generator | None,
    q_lower: np.ndarray,
    q_upper: np.ndarray,
    step_cap: np.ndarray | float | None = None,
) -> np.ndarray:
    """Start point: current joints plus bounded uniform noise, clamped.

    The jitter nudges the iterate off singular configurations; a zero
    magnitude or missing generator returns the current joints unchanged.
    `step_cap` (typically the trust-region radius) limits the per-joint
    magnitude so the optimizer can always walk injected noise back out.
    """
    if noise_magnitude < 0:
        raise ValueError("noise_magnitude must be >= 0")
    q = np.asarray(q_curr, dtype=float)
    if noise_magnitude == 0.0 or rng is None:
        return np.clip(q, q_lower, q_upper)
    mag = np.full(q.shape[0], noise_magnitude)
    if step_cap is not None:
        mag = np.minimum(mag, step_cap)
    u = rng.uniform(-1.0, 1.0, size=q.shape[0]) * mag
    return np.clip(q + u, q_lower, q_upper)


def max_step_from_jerk(state: ArmState, dt: float, j_max: float) -> np.ndarray:
    """Per-joint displacement reachable in one tick without exceeding j_max,
    given the filtered velocity/acceleration estimates."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return np.abs(state.qdot) * dt + 0.5 * np.abs(state.qddot) * dt**2 + j_max * dt**3 / 6.0


def _normal_equations(blocks, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Assemble J^T W J and J^T W r with W = family weight * IRLS factor."""
    H = np.zeros((n, n))
    g = np.zeros(n)
    for b in blocks:
        if b.jacobian is None or b.residuals.size == 0:
            continue
        _, irls = apply_robust_loss(b)
        wt = b.weight * irls
        if wt == 0.0:
            continue
        H += wt * (b.jacobian.T @ b.jacobian)
        g += wt * (b.jacobian.T @ b.residuals)
    return H, g


def lm_iterate(
    trust: TrustRegionState,
    blocks,
    q: np.ndarray,
    q_lower: np.ndarray,
    q_upper: np.ndarray,
    config: SolverConfig,
) -> np.ndarray | None:
    """One damped step proposal: solve the reweighted normal equations,
    rescale into the trust region, project to bounds.

    Returns the candidate point, or None when the normal equations are
    singular (the caller counts that as a rejected step and raises lambda).
    """
    n = q.shape[0]
    H, g = _normal_equations(blocks, n)
    diag = np.maximum(np.diag(H), 1e-12)
    try:
        delta = np.linalg.solve(H + trust.lam * np.diag(diag), -g)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(delta)):
        return None
    # Direction-preserving rescale onto the per-joint step box.
    overshoot = float(np.max(np.abs(delta) / trust.radius, initial=0.0))
    if overshoot > 1.0:
        delta = delta / overshoot
    return np.clip(q + delta, q_lower, q_upper)


def convergence_check(
    trust: TrustRegionState,
    step_inf: float,
    rel_cost_change: float,
    grad_inf: float,
    config: SolverConfig,
) -> bool:
    return (
        step_inf < config.step_tol
        or rel_cost_change < config.cost_tol
        or grad_inf < config.grad_tol
    )


def interior_bounds(
    q_lower: np.ndarray, q_upper: np.ndarray, eps_limit: float
) -> tuple[np.ndarray, np.ndarray]:
    """Projection box kept strictly inside the limits.

    The joint-limit barrier's pole sits eps inside each bound; projecting
    exactly onto a bound would trap the iterate behind that pole, so trial
    points are clamped 2*eps inside (capped at 5% of the joint range). The
    strict-inequality bound constraint holds a fortiori.
    """
    margin = np.minimum(2.0 * eps_limit, 0.05 * (q_upper - q_lower))
    return q_lower + margin, q_upper - margin


def solve(request: SolveRequest, rng: np.random.Generator | None = None) -> SolveResult:
    """Minimize the weighted robust objective around the current state."""
    t0 = time.perf_counter()
    model = request.model
    cfg = request.solver
    lower, upper = interior_bounds(model.q_lower, model.q_upper, request.weights.eps_limit)
    state = request.state

    status = None
    q_curr = state.q
    if np.any(q_curr < model.q_lower - 1e-12) or np.any(q_curr > model.q_upper + 1e-12):
        status = INFEASIBLE_START
    q_curr = np.clip(q_curr, lower, upper)

    if request.snapshot is not None and request.snapshot_stamp is not None:
        if abs(request.snapshot_stamp - state.stamp) > request.dt + 1e-9:
            raise ValueError("snapshot is stale: more than one tick older than the state")

    own = sphere_world_positions(model, q_curr, arm_index=0)
    scene = combine_spheres([own, request.snapshot]) if request.snapshot is not None else own
    acm = request.acm
    if acm is None:
        acm = acm_from_owners(model, scene.owners, scene.link_idx)
    elif acm.size != scene.count:
        raise ValueError(f"ACM covers {acm.size} objects, scene has {scene.count}")
    pairs = find_active_pairs(scene, acm, request.proximity)

    ctx = CostContext(model, request.goal, request.weights, state, request.dt, pairs)
    radius = np.minimum(max_step_from_jerk(state, request.dt, request.weights.j_max),
                        cfg.radius_cap)
    # Velocity limits bound the whole tick's displacement. Normal tracking
    # never hits this box, but without it many accepted inner steps can flip
    # the wrist through an obstacle between two logged states faster than the
    # entry-state proximity snapshot can see.
    tick_box = np.maximum(model.vel_limits * request.dt, radius)
    lower = np.maximum(lower, q_curr - tick_box)
    upper = np.minimum(upper, q_curr + tick_box)
    q = initialize_variables(q_curr, request.weights.noise_magnitude, rng, lower, upper,
                             step_cap=radius)
    trust = TrustRegionState(lam=cfg.lambda_init, radius=radius)

    blocks = evaluate_cost_blocks(ad.seed(q), ctx)
    cost = total_cost(blocks)
    iterations = 0
    converged = False

    for _ in range(cfg.max_iterations):
        iterations += 1
        _, g = _normal_equations(blocks, model.n)
        if 2.0 * float(np.max(np.abs(g), initial=0.0)) < cfg.grad_tol:
            converged = True
            break
        candidate = lm_iterate(trust, blocks, q, lower, upper, cfg)
        if candidate is None:
            trust.lam = min(trust.lam * cfg.lambda_up, cfg.lambda_max)
            trust.rejected += 1
            continue
        step = candidate - q
        step_inf = float(np.max(np.abs(step), initial=0.0))
        if step_inf < cfg.step_tol:
            converged = True
            break
        cand_blocks = evaluate_cost_blocks(ad.seed(candidate), ctx)
        cand_cost = total_cost(cand_blocks)
        if cand_cost < cost:
            rel_change = (cost - cand_cost) / max(cost, 1e-300)
            q, blocks, cost = candidate, cand_blocks, cand_cost
            trust.lam = max(trust.lam / cfg.lambda_down, cfg.lambda_min)
            trust.accepted += 1
            if convergence_check(trust, step_inf, rel_change, np.inf, cfg):
                converged = True
                break
        else:
            trust.lam = min(trust.lam * cfg.lambda_up, cfg.lambda_max)
            trust.rejected += 1

    if status is None:
        status = CONVERGED if converged else MAX_ITERATIONS
    return SolveResult(
        q_cmd=q,
        status=status,
        iterations=iterations,
        cost_breakdown=cost_breakdown(blocks),
        wall_time=time.perf_counter() - t0,
        total_cost=cost,
        min_gap=pairs[0].gap if pairs else None,
        active_pair_count=len(pairs),
        active_pairs=pairs,
        accepted_steps=trust.accepted,
        rejected_steps=trust.rejected,
    )
