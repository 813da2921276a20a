"""
Quaternion arithmetic and the quaternion-tuple pairing r·ū.

Quaternions are stored as float64 arrays whose last axis holds the
components (w, x, y, z) with the right-handed Hamilton convention ij = k.
The array functions broadcast over leading axes, so batches of points are
handled without Python loops. `Quaternion` is a small value type on top of
them for scalar work and literal formatting.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from errors import DimensionError

QArray = NDArray[np.float64]

# Basis 1, i, j, k
BASIS = np.eye(4)


def _as_quaternion_array(a: ArrayLike) -> QArray:
    arr = np.asarray(a.as_array() if isinstance(a, Quaternion) else a, dtype=np.float64)
    if arr.shape[-1:] != (4,):
        raise DimensionError(f"Quaternion arrays need a trailing axis of length 4, got shape {arr.shape}")
    return arr


def qmul(a: ArrayLike, b: ArrayLike) -> QArray:
    """Hamilton product a·b (non-commutative), broadcast over leading axes."""
    a = _as_quaternion_array(a)
    b = _as_quaternion_array(b)
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    # Pairs that cancel in a·conj(a) are summed first so its imaginary part is exactly 0
    return np.stack([
        (aw * bw - ax * bx) - (ay * by + az * bz),
        (aw * bx + ax * bw) + (ay * bz - az * by),
        (aw * by + ay * bw) + (az * bx - ax * bz),
        (aw * bz + az * bw) + (ax * by - ay * bx),
    ], axis=-1)


def qconj(a: ArrayLike) -> QArray:
    """Quaternion conjugate: negates the i, j, k components."""
    a = _as_quaternion_array(a)
    return a * np.array([1.0, -1.0, -1.0, -1.0])


def qim(a: ArrayLike) -> NDArray[np.float64]:
    """Imaginary part as a point of R^3, shape (..., 3)."""
    return _as_quaternion_array(a)[..., 1:]


def qnorm_sq(a: ArrayLike) -> NDArray[np.float64]:
    """|a|^2 = w^2 + x^2 + y^2 + z^2."""
    a = _as_quaternion_array(a)
    return np.sum(a * a, axis=-1)


def qnorm(a: ArrayLike) -> NDArray[np.float64]:
    return np.sqrt(qnorm_sq(a))


def qtuple_norm_sq(u: ArrayLike) -> NDArray[np.float64]:
    """|u|^2 = sum_j |u_j|^2 for a quaternion tuple of shape (..., n, 4)."""
    u = _as_quaternion_array(u)
    return np.sum(u * u, axis=(-2, -1))


def dot_bar(r: ArrayLike, u: ArrayLike) -> QArray:
    """
    The pairing r·ū = sum_j r_j conj(u_j).

    Args:
        r: quaternion tuple, shape (..., n, 4)
        u: quaternion tuple, shape (..., n, 4)

    Returns:
        One quaternion per batch entry, shape (..., 4).

    Raises:
        DimensionError: if the tuple lengths differ.
    """
    r = _as_quaternion_array(r)
    u = _as_quaternion_array(u)
    if r.ndim < 2 or u.ndim < 2 or r.shape[-2] != u.shape[-2]:
        raise DimensionError(
            f"dot_bar needs tuples of equal length, got shapes {r.shape} and {u.shape}"
        )
    return np.sum(qmul(r, qconj(u)), axis=-2)


@lru_cache(maxsize=1)
def imag_bilinear_forms() -> Tuple[NDArray[np.float64], ...]:
    """
    Matrices B_1, B_2, B_3 with Im(a·conj(b))_k = a^T B_k b.

    Derived from qmul on the basis; every B_k is antisymmetric with
    integer entries.
    """
    table = qim(qmul(BASIS[:, None, :], qconj(BASIS[None, :, :])))  # (4, 4, 3)
    forms = tuple(np.ascontiguousarray(table[:, :, k]) for k in range(3))
    for form in forms:
        form.setflags(write=False)
    return forms


@dataclass(frozen=True)
class Quaternion:
    """A single quaternion w + x i + y j + z k."""
    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_array(cls, arr: ArrayLike) -> "Quaternion":
        values = _as_quaternion_array(arr)
        if values.shape != (4,):
            raise DimensionError(f"Expected a single quaternion, got shape {values.shape}")
        return cls(*(float(v) for v in values))

    def as_array(self) -> QArray:
        return np.array([self.w, self.x, self.y, self.z], dtype=np.float64)

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion.from_array(self.as_array() + other.as_array())

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion.from_array(self.as_array() - other.as_array())

    def __neg__(self) -> "Quaternion":
        return Quaternion.from_array(-self.as_array())

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion.from_array(qmul(self, other))
        return Quaternion.from_array(self.as_array() * float(other))

    __rmul__ = __mul__

    def conj(self) -> "Quaternion":
        return Quaternion.from_array(qconj(self))

    def imag(self) -> Tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def norm(self) -> float:
        return float(qnorm(self))

    def is_real(self) -> bool:
        return self.x == 0 and self.y == 0 and self.z == 0

    def __str__(self) -> str:
        # Literal form w+xi+yj+zk, accepted back by literals.parse_quaternion
        text = repr(self.w)
        for value, unit in ((self.x, 'i'), (self.y, 'j'), (self.z, 'k')):
            sign = '-' if np.signbit(value) else '+'
            text += f"{sign}{repr(abs(value))}{unit}"
        return text
