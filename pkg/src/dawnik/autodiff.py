"""Forward-mode differentiation on numpy arrays.

A :class:`Dual` carries a value array of shape ``S`` together with the
derivative array of shape ``S + (n,)``, where ``n`` is the number of
independent variables (the joint command vector). Arithmetic propagates
derivatives by the chain rule, so residual code written against this module
yields exact Jacobians without a separate derivation step. Plain numpy
arrays and scalars mix freely and are treated as constants.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Dual",
    "seed",
    "value_of",
    "jacobian_of",
    "concat",
    "sin",
    "cos",
    "sqrt",
    "absolute",
    "hinge",
    "matmul",
    "norm3",
    "dot",
]


def _match(der: np.ndarray, val_shape) -> np.ndarray:
    """Broadcast a derivative array so its leading shape equals val_shape."""
    val_shape = tuple(val_shape)
    if der.shape[:-1] == val_shape:
        return der
    return np.broadcast_to(der, val_shape + (der.shape[-1],)).copy()


class Dual:
    """Array of dual numbers: value plus derivative w.r.t. n variables."""

    __slots__ = ("val", "der")

    # Keep numpy from consuming us in mixed expressions; force __r*__ dispatch.
    __array_ufunc__ = None

    def __init__(self, val, der):
        self.val = val if isinstance(val, np.ndarray) else np.asarray(val, dtype=float)
        self.der = der if isinstance(der, np.ndarray) else np.asarray(der, dtype=float)

    @property
    def nvars(self) -> int:
        return self.der.shape[-1]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.val.shape

    def __repr__(self) -> str:
        return f"Dual(val={self.val!r})"

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.der + other.der)
        return Dual(self.val + other, _match(self.der, np.shape(self.val + other)))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.der - other.der)
        return Dual(self.val - other, _match(self.der, np.shape(self.val - other)))

    def __rsub__(self, other):
        return Dual(other - self.val, _match(-self.der, np.shape(other - self.val)))

    def __neg__(self):
        return Dual(-self.val, -self.der)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.val * other.val,
                self.der * other.val[..., None] + self.val[..., None] * other.der,
            )
        other = np.asarray(other, dtype=float)
        return Dual(self.val * other, self.der * other[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.val
            val = self.val * inv
            der = (self.der - val[..., None] * other.der) * inv[..., None]
            return Dual(val, der)
        other = np.asarray(other, dtype=float)
        return Dual(self.val / other, self.der / other[..., None])

    def __rtruediv__(self, other):
        inv = 1.0 / self.val
        val = other * inv
        return Dual(val, -val[..., None] * self.der * inv[..., None])

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, idx):
        return Dual(self.val[idx], self.der[idx])

    def sum(self, axis=None):
        if axis is None:
            axes = tuple(range(self.val.ndim))
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            axes = tuple(a % self.val.ndim for a in axes)
        return Dual(self.val.sum(axis=axes), self.der.sum(axis=axes))

    @property
    def T(self):
        order = tuple(range(self.val.ndim))[::-1]
        return Dual(self.val.transpose(order), self.der.transpose(order + (self.val.ndim,)))


def seed(q: np.ndarray) -> Dual:
    """Promote a variable vector to a Dual with identity derivative."""
    q = np.asarray(q, dtype=float)
    return Dual(q.copy(), np.eye(q.shape[0]))


def value_of(x) -> np.ndarray:
    return x.val if isinstance(x, Dual) else np.asarray(x, dtype=float)


def jacobian_of(x, nvars: int) -> np.ndarray:
    """Derivative array of x, or zeros when x carries no derivatives."""
    if isinstance(x, Dual):
        return x.der
    x = np.asarray(x, dtype=float)
    return np.zeros(x.shape + (nvars,))


def concat(parts: list) -> "Dual | np.ndarray":
    """Concatenate 1-D pieces, promoting to Dual if any piece is one."""
    duals = [p for p in parts if isinstance(p, Dual)]
    if not duals:
        return np.concatenate([np.atleast_1d(np.asarray(p, dtype=float)) for p in parts])
    n = duals[0].nvars
    vals, ders = [], []
    for p in parts:
        v = np.atleast_1d(value_of(p))
        vals.append(v)
        if isinstance(p, Dual):
            ders.append(p.der.reshape(v.shape + (n,)))
        else:
            ders.append(np.zeros(v.shape + (n,)))
    return Dual(np.concatenate(vals), np.concatenate(ders, axis=0))


def sin(x):
    if isinstance(x, Dual):
        return Dual(np.sin(x.val), np.cos(x.val)[..., None] * x.der)
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(np.cos(x.val), -np.sin(x.val)[..., None] * x.der)
    return np.cos(x)


def sqrt(x):
    if isinstance(x, Dual):
        root = np.sqrt(x.val)
        return Dual(root, x.der / (2.0 * root[..., None]))
    return np.sqrt(x)


def arccos(x):
    if isinstance(x, Dual):
        return Dual(np.arccos(x.val), -x.der / np.sqrt(1.0 - x.val**2)[..., None])
    return np.arccos(x)


def absolute(x):
    """|x| with subgradient 0 at the kink."""
    if isinstance(x, Dual):
        return Dual(np.abs(x.val), np.sign(x.val)[..., None] * x.der)
    return np.abs(x)


def hinge(x):
    """max(0, x); derivative is zero on the inactive side and at the kink."""
    if isinstance(x, Dual):
        active = (x.val > 0.0).astype(float)
        return Dual(x.val * active, x.der * active[..., None])
    return np.maximum(0.0, x)


def _dA_B(ader: np.ndarray, bv: np.ndarray) -> np.ndarray:
    """Derivative product d(A)/dq @ B for 2-D A (der shape (i,j,n))."""
    if bv.ndim == 1:
        return ader.transpose(0, 2, 1) @ bv  # (i,n)
    return (ader.transpose(2, 0, 1) @ bv).transpose(1, 2, 0)  # (i,k,n)


def _A_dB(av: np.ndarray, bder: np.ndarray) -> np.ndarray:
    """Derivative product A @ d(B)/dq."""
    if bder.ndim == 2:  # B is a vector, der (j,n)
        return av @ bder
    j, k, n = bder.shape
    return (av @ bder.reshape(j, k * n)).reshape(av.shape[0], k, n)


def matmul(a, b):
    """Matrix product for 2-D @ (2-D | 1-D) operands, dual-aware."""
    if not isinstance(a, Dual) and not isinstance(b, Dual):
        return a @ b
    av, bv = value_of(a), value_of(b)
    val = av @ bv
    if isinstance(a, Dual) and isinstance(b, Dual):
        der = _dA_B(a.der, bv) + _A_dB(av, b.der)
    elif isinstance(a, Dual):
        der = _dA_B(a.der, bv)
    else:
        der = _A_dB(av, b.der)
    return Dual(val, der)


def dot(a, b):
    """Inner product of two 1-D operands."""
    return (a * b).sum() if isinstance(a, Dual) or isinstance(b, Dual) else float(np.dot(a, b))


def norm3(x, floor: float = 1e-12):
    """Euclidean norm of a 3-vector, guarded against the origin singularity."""
    s = dot(x, x)
    if isinstance(s, Dual):
        if s.val < floor * floor:
            s = s + floor * floor
        return sqrt(s)
    return float(np.sqrt(max(s, floor * floor)))
