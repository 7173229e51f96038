"""Proximity pipeline: AABB broad phase, sphere-gap narrow phase, active pairs.

Works on a flat `WorldSpheres` snapshot whose ids follow the scene ordering
[controlled arm | external arms] used by `model.build_acm`. Sphere-sphere
distance is closed form, so the narrow phase is exact; the broad phase only
culls, and with inflation >= activation distance it cannot cull a pair that
the activation threshold would keep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import WorldSpheres
from .model import AllowedCollisionMatrix


@dataclass(frozen=True)
class AABB:
    min: np.ndarray
    max: np.ndarray


@dataclass(frozen=True)
class ActivePair:
    """One culled-in sphere pair; `id_a` always sits on the controlled arm."""

    id_a: int
    id_b: int
    center_a: np.ndarray
    center_b: np.ndarray
    r_a: float
    r_b: float
    d_ab: float
    gap: float  # d_ab - r_a - r_b; negative means penetration


@dataclass(frozen=True)
class ProximityConfig:
    activation_distance: float = 0.15
    inflation: float = 0.15
    max_pairs: int = 32

    def __post_init__(self):
        if self.inflation < 0:
            raise ValueError("inflation must be >= 0")
        if self.activation_distance > self.inflation:
            raise ValueError(
                "activation_distance must not exceed the broad-phase inflation "
                "(otherwise nearby pairs could be culled before activation)"
            )


def compute_aabbs(spheres: WorldSpheres, inflation: float) -> list[AABB]:
    """Axis-aligned box per sphere: center +- (radius + inflation)."""
    if inflation < 0:
        raise ValueError("inflation must be >= 0")
    half = (spheres.radii + inflation)[:, None]
    mins = spheres.centers - half
    maxs = spheres.centers + half
    return [AABB(mins[i], maxs[i]) for i in range(spheres.count)]


def broad_phase(
    controlled: list[AABB], others: list[AABB], acm: AllowedCollisionMatrix
) -> list[tuple[int, int]]:
    """Sort-and-sweep over the combined box set, keeping ACM-checked overlaps.

    Ids are positions in the [controlled | others] concatenation, matching the
    ACM. Controlled-internal pairs are part of the sweep: the ACM decides
    which of them (non-adjacent links) are real candidates.
    """
    boxes = list(controlled) + list(others)
    m = len(boxes)
    if m == 0:
        return []
    mins = np.array([b.min for b in boxes])
    maxs = np.array([b.max for b in boxes])
    order = np.argsort(mins[:, 0], kind="stable")
    pairs: list[tuple[int, int]] = []
    for pos, i in enumerate(order):
        x_max = maxs[i, 0]
        for j in order[pos + 1 :]:
            if mins[j, 0] > x_max:
                break
            if acm.allowed[i, j]:
                continue
            if (
                mins[j, 1] <= maxs[i, 1]
                and mins[i, 1] <= maxs[j, 1]
                and mins[j, 2] <= maxs[i, 2]
                and mins[i, 2] <= maxs[j, 2]
            ):
                pairs.append((int(min(i, j)), int(max(i, j))))
    return pairs


def narrow_phase(pairs: list[tuple[int, int]], spheres: WorldSpheres) -> list[ActivePair]:
    """Exact gaps for the candidate pairs, sorted by ascending gap.

    Each pair is oriented so the controlled-arm object (owner 0) comes first.
    """
    index = {int(obj_id): row for row, obj_id in enumerate(spheres.ids)}
    out = []
    for a, b in pairs:
        ia, ib = index[a], index[b]
        if spheres.owners[ib] == 0 and spheres.owners[ia] != 0:
            a, b, ia, ib = b, a, ib, ia
        delta = spheres.centers[ia] - spheres.centers[ib]
        d = float(np.linalg.norm(delta))
        r_a = float(spheres.radii[ia])
        r_b = float(spheres.radii[ib])
        out.append(
            ActivePair(
                id_a=int(a),
                id_b=int(b),
                center_a=spheres.centers[ia].copy(),
                center_b=spheres.centers[ib].copy(),
                r_a=r_a,
                r_b=r_b,
                d_ab=d,
                gap=d - (r_a + r_b),  # grouped so gap(a,b) == gap(b,a) exactly
            )
        )
    out.sort(key=lambda p: (p.gap, p.id_a, p.id_b))
    return out


def select_active_pairs(
    pairs: list[ActivePair], activation_distance: float, max_pairs: int
) -> list[ActivePair]:
    """Pairs with gap <= activation distance, truncated to the closest few."""
    kept = [p for p in pairs if p.gap <= activation_distance]
    kept.sort(key=lambda p: (p.gap, p.id_a, p.id_b))
    return kept[:max_pairs]


def find_active_pairs(
    spheres: WorldSpheres, acm: AllowedCollisionMatrix, config: ProximityConfig
) -> list[ActivePair]:
    """Full pipeline: inflate, cull, measure, select."""
    boxes = compute_aabbs(spheres, config.inflation)
    candidates = broad_phase(boxes, [], acm)
    measured = narrow_phase(candidates, spheres)
    return select_active_pairs(measured, config.activation_distance, config.max_pairs)
