"""Rigid-body geometry: rotations, quaternions, transforms.

Quaternions use the [w, x, y, z] convention and are hemisphere-normalized
(scalar part >= 0) wherever they cross a public boundary. Functions on the
solver's differentiation path (`axis_rotation`, `rotation_vector_from_matrix`,
`Transform` composition) accept either plain arrays or `autodiff.Dual`
operands; the quaternion helpers are value-only.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad

_EYE3 = np.eye(3)


class Transform:
    """Rotation matrix + translation. Entries may be Dual for AD paths."""

    __slots__ = ("R", "t")

    def __init__(self, R, t):
        self.R = R
        self.t = t

    @classmethod
    def identity(cls) -> "Transform":
        return cls(_EYE3.copy(), np.zeros(3))

    def compose(self, other: "Transform") -> "Transform":
        return Transform(ad.matmul(self.R, other.R), ad.matmul(self.R, other.t) + self.t)

    def apply(self, point):
        return ad.matmul(self.R, point) + self.t

    def apply_points(self, points: np.ndarray):
        """Transform an (N, 3) array of points."""
        return ad.matmul(self.R, points.T).T + self.t

    def inverse(self) -> "Transform":
        Rt = np.asarray(self.R).T
        return Transform(Rt, -(Rt @ np.asarray(self.t)))


def rpy_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rotation matrix from fixed-axis roll/pitch/yaw angles (Rz @ Ry @ Rx)."""
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def rotation_basis(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Constant matrices (outer, cos-basis, skew) for Rodrigues' formula, so
    repeated rotations about a fixed axis cost two scalar-matrix products:
    R(t) = outer + cos(t) * (I - outer) + sin(t) * skew."""
    a = np.asarray(axis, dtype=float)
    k = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
    outer = np.outer(a, a)
    return outer, _EYE3 - outer, k


def rotation_from_basis(basis, angle):
    outer, cos_basis, skew = basis
    return outer + ad.cos(angle) * cos_basis + ad.sin(angle) * skew


def axis_rotation(axis: np.ndarray, angle):
    """Rotation about a fixed unit axis by a (possibly Dual) angle."""
    return rotation_from_basis(rotation_basis(axis), angle)


def normalize_quat(q: np.ndarray) -> np.ndarray:
    """Unit-norm, hemisphere-normalized copy of q (scalar part >= 0)."""
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q)
    if q[0] < 0.0:
        q = -q
    return q


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def matrix_from_quat(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(R: np.ndarray) -> np.ndarray:
    """Quaternion from a rotation matrix (Shepperd's branching), w >= 0."""
    R = np.asarray(R, dtype=float)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
        )
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array(
            [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
        )
    elif R[1, 1] >= R[2, 2]:
        s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array(
            [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
        )
    else:
        s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array(
            [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
        )
    return normalize_quat(q)


# Below this cosine the log map is within ~1.4e-3 rad of the identity and the
# arccos derivative starts to lose precision; switch to the series expansion.
_SERIES_COS = 1.0 - 1e-6
# Guard against exactly antipodal rotations, where the skew part vanishes.
_MIN_COS = -1.0 + 1e-7


def rotation_vector_from_matrix(R):
    """Axis*angle 3-vector of a rotation matrix (dual-aware log map).

    Accurate for angles in [0, pi); within ~1e-4 of pi the direction of the
    result degrades with the vanishing skew-symmetric part.
    """
    skew = 0.5 * ad.concat([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    x = 0.5 * (R[0, 0] + R[1, 1] + R[2, 2] - 1.0)  # cos(angle)
    xv = float(ad.value_of(x))
    if xv >= _SERIES_COS:
        u = 1.0 - x
        theta_sq = 2.0 * u + u * u / 3.0
        scale = 1.0 + theta_sq / 6.0 + 7.0 * theta_sq * theta_sq / 360.0
    else:
        if xv < _MIN_COS:
            x = x - (xv - _MIN_COS)  # clamp value, keep derivative
        theta = ad.arccos(x)
        scale = theta / ad.sin(theta)
    return skew * scale
