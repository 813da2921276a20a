"""
Numerical equivalence constants between homogeneous quasi-norms.

For norms A and B, the sandwich m ||v||_A <= ||v||_B <= M ||v||_A holds with
m and M the extrema of B over the unit sphere of A. The sphere is compact and
both norms are continuous, so sampling directions, dilating them onto the
A-sphere and tracking the extrema of B converges to (m, M); an optional local
hill-climb sharpens the two witnesses.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
from numpy.typing import NDArray

from config import Config
from errors import DomainError, UnsupportedFamilyError
from group_ops import GroupElement, dilate, random_elements, random_unit_directions
from logging_config import LogContext
from norms import NormSpec, evaluate
from sentry_config import sentry_trace

logger = logging.getLogger(__name__)


@dataclass
class EquivEstimate:
    """Estimated sandwich constants with their witnesses on the A-sphere."""
    spec_from: str
    spec_to: str
    lower_m: float
    upper_M: float
    argmin: GroupElement
    argmax: GroupElement
    samples: int
    seed: int
    refined: bool
    n: int = 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "from": self.spec_from,
            "to": self.spec_to,
            "lower_m": self.lower_m,
            "upper_M": self.upper_M,
            "argmin": self.argmin.to_json(),
            "argmax": self.argmax.to_json(),
            "samples": self.samples,
            "seed": self.seed,
            "refined": self.refined,
            "n": self.n,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EquivEstimate":
        return cls(
            spec_from=data["from"],
            spec_to=data["to"],
            lower_m=float(data["lower_m"]),
            upper_M=float(data["upper_M"]),
            argmin=GroupElement.from_json(data["argmin"]),
            argmax=GroupElement.from_json(data["argmax"]),
            samples=int(data["samples"]),
            seed=int(data["seed"]),
            refined=bool(data.get("refined", False)),
            n=int(data.get("n", 1)),
        )


@dataclass
class SandwichReport:
    """Outcome of checking an estimate on fresh points."""
    violations: int
    max_excess: float
    fresh_samples: int
    seed: int
    witness: Optional[GroupElement] = None


def _require_homogeneous(spec: NormSpec):
    if not spec.is_homogeneous:
        raise UnsupportedFamilyError(
            f"{spec.label} is not homogeneous under dilations; unit-sphere projection is undefined"
        )


def project_to_sphere(spec: NormSpec, v: GroupElement) -> GroupElement:
    """
    Dilate `v` onto the unit sphere of `spec`: delta_{1/||v||}(v).

    Raises:
        UnsupportedFamilyError for the box norm.
        DomainError if any point is the identity.
    """
    _require_homogeneous(spec)
    values = np.asarray(evaluate(spec, v))
    if np.any(values == 0):
        raise DomainError("The identity has no projection onto a unit sphere")
    return dilate(1.0 / values, v)


def _refine_witness(spec_a: NormSpec, spec_b: NormSpec, start: GroupElement,
                    maximize: bool, max_iter: int, tol: float) -> GroupElement:
    """
    Coordinate-perturbation hill climb on the A-sphere.

    Each sweep evaluates all 2(4n+3) signed coordinate steps at once,
    re-projects them onto the sphere and moves to the best strict
    improvement. The step is halved after a sweep without improvement; the
    climb stops when an accepted improvement is below `tol`, the step
    underflows, or `max_iter` sweeps have run.
    """
    sign = -1.0 if maximize else 1.0
    coords = start.coordinates()
    n = start.n
    dim = coords.shape[-1]
    directions = np.concatenate([np.eye(dim), -np.eye(dim)])
    current = sign * float(evaluate(spec_b, start))
    step = 0.1

    for iteration in range(max_iter):
        candidates = GroupElement.from_coordinates(coords + step * directions, n)
        candidates = project_to_sphere(spec_a, candidates)
        values = sign * np.asarray(evaluate(spec_b, candidates))
        best = int(np.argmin(values))
        if values[best] < current:
            improvement = current - values[best]
            coords = candidates.coordinates()[best]
            current = float(values[best])
            if improvement < tol:
                break
        else:
            step *= 0.5
            if step < 1e-12:
                break
    else:
        logger.debug(f"Refinement stopped at the iteration cap ({max_iter})")

    logger.debug(f"Refinement finished after {iteration + 1} sweeps, value={sign * current:.15f}")
    return GroupElement.from_coordinates(coords, n)


def _chunk_sizes(samples: int, chunk_size: int) -> Iterable[int]:
    remaining = samples
    while remaining > 0:
        size = min(chunk_size, remaining)
        yield size
        remaining -= size


@sentry_trace(op="montecarlo", description="Equivalence constants")
def estimate_constants(spec_a: NormSpec, spec_b: NormSpec, samples: int, seed: int,
                       refine: bool = False, n: int = 1,
                       chunk_size: int = None) -> EquivEstimate:
    """
    Estimate m, M with m ||v||_A <= ||v||_B <= M ||v||_A.

    Directions are uniform on the Euclidean unit sphere of the coordinates,
    drawn chunk by chunk from one generator seeded with `seed`, dilated onto
    the A-sphere, and B is evaluated there. Ties keep the earliest sample.

    Args:
        spec_a: norm whose unit sphere is searched (the "from" norm)
        spec_b: norm being bounded (the "to" norm)
        samples: number of directions, >= 1
        seed: RNG seed
        refine: run the hill climb from both witnesses
        n: quaternionic dimension
        chunk_size: directions per batch (defaults to Config.CHUNK_SIZE)

    Returns:
        EquivEstimate

    Raises:
        UnsupportedFamilyError if either norm is the box norm.
        DomainError if samples < 1.
    """
    _require_homogeneous(spec_a)
    _require_homogeneous(spec_b)
    if samples < 1:
        raise DomainError(f"samples must be at least 1, got {samples}")
    chunk_size = chunk_size or Config.CHUNK_SIZE
    rng = np.random.default_rng(seed)

    lower, upper = math.inf, -math.inf
    argmin = argmax = None
    with LogContext(family=f"{spec_a.label}->{spec_b.label}", seed=seed):
        for size in _chunk_sizes(samples, chunk_size):
            points = project_to_sphere(spec_a, random_unit_directions(rng, n, size))
            values = np.asarray(evaluate(spec_b, points))
            low, high = int(np.argmin(values)), int(np.argmax(values))
            if values[low] < lower:
                lower, argmin = float(values[low]), points[low]
            if values[high] > upper:
                upper, argmax = float(values[high]), points[high]

        logger.info(f"Sampled constants over {samples} directions: m={lower:.12f} M={upper:.12f}")

        if refine:
            argmin = _refine_witness(spec_a, spec_b, argmin, False,
                                     Config.REFINE_MAX_ITER, Config.REFINE_TOL)
            argmax = _refine_witness(spec_a, spec_b, argmax, True,
                                     Config.REFINE_MAX_ITER, Config.REFINE_TOL)
            lower = min(lower, float(evaluate(spec_b, argmin)))
            upper = max(upper, float(evaluate(spec_b, argmax)))
            logger.info(f"Refined constants: m={lower:.15f} M={upper:.15f}")

    return EquivEstimate(
        spec_from=spec_a.label,
        spec_to=spec_b.label,
        lower_m=lower,
        upper_M=upper,
        argmin=argmin,
        argmax=argmax,
        samples=samples,
        seed=seed,
        refined=refine,
        n=n,
    )


def _excess(est: EquivEstimate, a_values: NDArray[np.float64],
            b_values: NDArray[np.float64]) -> NDArray[np.float64]:
    # Relative amount by which each point breaks m*A <= B <= M*A (<= 0 when it holds)
    with np.errstate(divide='ignore', invalid='ignore'):
        below = np.where(b_values > 0, est.lower_m * a_values / b_values - 1.0, np.inf)
        above = np.where(a_values > 0, b_values / (est.upper_M * a_values) - 1.0, np.inf)
    return np.maximum(below, above)


@sentry_trace(op="montecarlo", description="Sandwich verification")
def verify_sandwich(est: EquivEstimate, spec_a: NormSpec, spec_b: NormSpec,
                    fresh_samples: int, seed: int, scale: Optional[float] = None,
                    tol: float = None) -> SandwichReport:
    """
    Count fresh points that break m ||v||_A <= ||v||_B <= M ||v||_A.

    Points are standard normal (arbitrary scale, not projected); `scale`
    dilates all of them, which leaves the outcome unchanged for homogeneous
    norms. A point counts as a violation when it breaks the bound by more
    than `tol` relative (defaults to Config.VERIFY_TOL).
    """
    if (spec_a.label, spec_b.label) != (est.spec_from, est.spec_to):
        raise DomainError(
            f"Estimate is for {est.spec_from}->{est.spec_to}, not {spec_a.label}->{spec_b.label}"
        )
    if fresh_samples < 1:
        raise DomainError(f"fresh_samples must be at least 1, got {fresh_samples}")
    tol = Config.VERIFY_TOL if tol is None else tol
    rng = np.random.default_rng(seed)

    violations = 0
    worst = -math.inf
    witness = None
    for size in _chunk_sizes(fresh_samples, Config.CHUNK_SIZE):
        points = random_elements(rng, est.n, size)
        if scale is not None:
            points = dilate(scale, points)
        excess = _excess(est, np.asarray(evaluate(spec_a, points)), np.asarray(evaluate(spec_b, points)))
        violations += int(np.count_nonzero(excess > tol))
        index = int(np.argmax(excess))
        if excess[index] > worst:
            worst, witness = float(excess[index]), points[index]

    logger.info(f"Sandwich {est.spec_from}->{est.spec_to}: {violations} violations, "
                f"max excess {worst:.3e} over {fresh_samples} points")
    return SandwichReport(
        violations=violations,
        max_excess=worst,
        fresh_samples=fresh_samples,
        seed=seed,
        witness=witness if violations else None,
    )


def equivalence_table(specs: List[NormSpec], samples: int, seed: int,
                      refine: bool = False, n: int = 1) -> List[EquivEstimate]:
    """Estimates for every ordered pair of distinct specs, in input order."""
    return [
        estimate_constants(spec_a, spec_b, samples, seed, refine=refine, n=n)
        for spec_a, spec_b in itertools.permutations(specs, 2)
    ]
