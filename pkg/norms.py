"""
Closed-form quasi-norms on the quaternionic Heisenberg group and the
primitives used to check the quasi-norm axioms.

All norm functions accept a single GroupElement or a batch and return a
float or an array accordingly.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from config import Config
from errors import DomainError, ParseError
from group_ops import GroupElement, dilate, ginv, gmul, random_elements
from sentry_config import sentry_trace

logger = logging.getLogger(__name__)

NormValue = Union[float, NDArray[np.float64]]


class NormFamily(str, Enum):
    KORANYI = "koranyi"
    FOLLAND_STEIN = "fs"
    ALPHA = "alpha"
    BOX = "box"
    MAX = "max"


# Families that are degree-1 homogeneous under delta_rho
HOMOGENEOUS_FAMILIES = frozenset({
    NormFamily.KORANYI, NormFamily.FOLLAND_STEIN, NormFamily.ALPHA, NormFamily.MAX,
})

_ALIASES = {
    "koranyi": NormFamily.KORANYI,
    "k": NormFamily.KORANYI,
    "fs": NormFamily.FOLLAND_STEIN,
    "folland-stein": NormFamily.FOLLAND_STEIN,
    "box": NormFamily.BOX,
    "max": NormFamily.MAX,
}


@dataclass(frozen=True)
class NormSpec:
    """A quasi-norm family; `alpha` is set only for the Alpha family."""
    family: NormFamily
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.family is NormFamily.ALPHA:
            if self.alpha is None or not self.alpha > 0:
                raise DomainError(f"Alpha family needs alpha > 0, got {self.alpha}")
            object.__setattr__(self, 'alpha', float(self.alpha))
        elif self.alpha is not None:
            raise DomainError(f"Only the alpha family takes a parameter, got {self.family.value}:{self.alpha}")

    @classmethod
    def parse(cls, text: str) -> "NormSpec":
        """Parse 'koranyi', 'fs', 'alpha:<a>', 'box' or 'max'."""
        key = (text or "").strip().lower()
        if key.startswith("alpha:"):
            try:
                alpha = float(key.split(":", 1)[1])
            except ValueError:
                raise ParseError(f"Invalid alpha parameter in '{text}'") from None
            if not alpha > 0:
                raise ParseError(f"Alpha must be positive, got '{text}'")
            return cls(NormFamily.ALPHA, alpha)
        if key in _ALIASES:
            return cls(_ALIASES[key])
        raise ParseError(f"Unknown norm family '{text}', expected koranyi|fs|alpha:<a>|box|max")

    @property
    def label(self) -> str:
        if self.family is NormFamily.ALPHA:
            return f"alpha:{self.alpha:g}"
        return self.family.value

    @property
    def is_homogeneous(self) -> bool:
        return self.family in HOMOGENEOUS_FAMILIES

    def __str__(self) -> str:
        return self.label


KORANYI = NormSpec(NormFamily.KORANYI)
FOLLAND_STEIN = NormSpec(NormFamily.FOLLAND_STEIN)
BOX = NormSpec(NormFamily.BOX)
MAX = NormSpec(NormFamily.MAX)


def _squared_parts(v: GroupElement) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    u_sq = np.sum(v.u * v.u, axis=(-2, -1))
    t_sq = np.sum(v.t * v.t, axis=-1)
    return u_sq, t_sq


def _scalar_or_array(values: NDArray[np.float64]) -> NormValue:
    return float(values) if np.ndim(values) == 0 else values


def koranyi(v: GroupElement) -> NormValue:
    """(|u|^4 + |t|^2)^(1/4)."""
    u_sq, t_sq = _squared_parts(v)
    return _scalar_or_array((u_sq ** 2.0 + t_sq ** 1.0) ** 0.25)


def folland_stein(v: GroupElement) -> NormValue:
    """(|u|^2 + |t|)^(1/2)."""
    u_sq, t_sq = _squared_parts(v)
    return _scalar_or_array(np.sqrt(u_sq + np.sqrt(t_sq)))


def alpha_norm(alpha: float, v: GroupElement) -> NormValue:
    """
    (|u|^alpha + |t|^(alpha/2))^(1/alpha), alpha > 0.

    Powers are taken of the squared magnitudes so that alpha = 4 performs
    exactly the Koranyi arithmetic.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    u_sq, t_sq = _squared_parts(v)
    return _scalar_or_array((u_sq ** (alpha / 2.0) + t_sq ** (alpha / 4.0)) ** (1.0 / alpha))


def box_norm(v: GroupElement) -> NormValue:
    """sqrt(|u|^2 + |t|^2), the Euclidean norm of the coordinates."""
    u_sq, t_sq = _squared_parts(v)
    return _scalar_or_array(np.sqrt(u_sq + t_sq))


def max_norm(v: GroupElement) -> NormValue:
    """max(|u|, |t|^(1/2))."""
    u_sq, t_sq = _squared_parts(v)
    return _scalar_or_array(np.maximum(np.sqrt(u_sq), t_sq ** 0.25))


def evaluate(spec: NormSpec, v: GroupElement) -> NormValue:
    """Evaluate the quasi-norm selected by `spec`."""
    family = spec.family
    if family is NormFamily.KORANYI:
        return koranyi(v)
    if family is NormFamily.FOLLAND_STEIN:
        return folland_stein(v)
    if family is NormFamily.ALPHA:
        return alpha_norm(spec.alpha, v)
    if family is NormFamily.BOX:
        return box_norm(v)
    if family is NormFamily.MAX:
        return max_norm(v)
    raise DomainError(f"Unhandled norm family {family}")


def homogeneity_defect(spec: NormSpec, v: GroupElement, rho: float) -> NormValue:
    """eval(spec, delta_rho v) - rho * eval(spec, v)."""
    if not rho > 0:
        raise DomainError(f"Dilation factor must be positive, got {rho}")
    return evaluate(spec, dilate(rho, v)) - rho * evaluate(spec, v)


def symmetry_defect(spec: NormSpec, v: GroupElement) -> NormValue:
    """|eval(spec, v^-1) - eval(spec, v)|."""
    return np.abs(evaluate(spec, ginv(v)) - evaluate(spec, v))


def quasi_triangle_ratio(spec: NormSpec, a: GroupElement, b: GroupElement) -> NormValue:
    """
    ||ab|| / (||a|| + ||b||).

    Raises:
        DomainError if a and b are both the identity (0/0).
    """
    denominator = np.asarray(evaluate(spec, a)) + np.asarray(evaluate(spec, b))
    if np.any(denominator == 0):
        raise DomainError("quasi_triangle_ratio is undefined when both points are the identity")
    return _scalar_or_array(np.asarray(evaluate(spec, gmul(a, b))) / denominator)


def koranyi_quasi_triangle_bound() -> float:
    """24^(1/4): the constant obtained by chaining |q+q'|^4 <= 8(|q|^4+|q'|^4)
    with |t+t'+2Im(q q̄')|^2 <= 2(|t|^2+|t'|^2+16|q|^2|q'|^2)."""
    return 24.0 ** 0.25


@dataclass
class QuasiTriangleEstimate:
    """Empirical supremum of the quasi-triangle ratio."""
    family: str
    supremum: float
    witness_a: GroupElement
    witness_b: GroupElement
    samples: int
    seed: int
    bound: float


@sentry_trace(op="montecarlo", description="Quasi-triangle supremum")
def quasi_triangle_supremum(spec: NormSpec, n: int, samples: int, seed: int,
                            chunk_size: int = None) -> QuasiTriangleEstimate:
    """
    Largest quasi_triangle_ratio over `samples` random pairs.

    Pairs are standard normal; each pair is rescaled by a log-uniform
    dilation in [1e-3, 1e3] on its second factor so that pairs of very
    different size are represented.
    """
    if samples < 1:
        raise DomainError(f"samples must be at least 1, got {samples}")
    chunk_size = chunk_size or Config.CHUNK_SIZE
    rng = np.random.default_rng(seed)

    best_value = -math.inf
    best_pair = None
    remaining = samples
    while remaining > 0:
        size = min(chunk_size, remaining)
        a = random_elements(rng, n, size)
        b = dilate(10.0 ** rng.uniform(-3.0, 3.0, size), random_elements(rng, n, size))
        ratios = quasi_triangle_ratio(spec, a, b)
        index = int(np.argmax(ratios))
        if ratios[index] > best_value:
            best_value = float(ratios[index])
            best_pair = (a[index], b[index])
        remaining -= size

    logger.info(f"Quasi-triangle supremum for {spec.label}: {best_value:.6f} over {samples} pairs")
    return QuasiTriangleEstimate(
        family=spec.label,
        supremum=best_value,
        witness_a=best_pair[0],
        witness_b=best_pair[1],
        samples=samples,
        seed=seed,
        bound=koranyi_quasi_triangle_bound(),
    )


def analytic_constants(spec_a: NormSpec, spec_b: NormSpec) -> Optional[Tuple[float, float]]:
    """
    Known sandwich constants (m, M) with m ||v||_a <= ||v||_b <= M ||v||_a.

    Returns None for pairs without a closed form here.
    """
    fourth_root_two = 2.0 ** 0.25

    def same_as_koranyi(spec: NormSpec) -> bool:
        return spec.family is NormFamily.KORANYI or (
            spec.family is NormFamily.ALPHA and spec.alpha == 4.0
        )

    if spec_a == spec_b or (same_as_koranyi(spec_a) and same_as_koranyi(spec_b)):
        return (1.0, 1.0)
    if spec_a == MAX and same_as_koranyi(spec_b):
        return (1.0, fourth_root_two)
    if same_as_koranyi(spec_a) and spec_b == MAX:
        return (1.0 / fourth_root_two, 1.0)
    if same_as_koranyi(spec_a) and spec_b == FOLLAND_STEIN:
        return (1.0, fourth_root_two)
    if spec_a == FOLLAND_STEIN and same_as_koranyi(spec_b):
        return (1.0 / fourth_root_two, 1.0)
    return None
