"""
Carnot-Caratheodory distance by direct transcription.

A horizontal path is a piecewise-constant control a(s) on the left-invariant
horizontal frame; it develops from the identity by

    u' = a,    t' = 2 Im(a · conj(u))

(the derivative of the group law in its second factor). The distance to a
target is the shortest developed path that ends there: path length is
minimized under a quadratic endpoint penalty whose weight grows stage by
stage, then a Gauss-Newton step pulls the endpoint onto the target.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import minimize

from config import Config
from equivalence import project_to_sphere
from errors import DimensionError, DomainError
from group_ops import GroupElement, dilate, ginv, gmul, random_unit_directions
from logging_config import LogContext
from norms import KORANYI, koranyi
from quaternion_core import dot_bar, imag_bilinear_forms, qim
from sentry_config import sentry_trace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverParams:
    """Numerical settings of the CC solver."""
    steps: int = 32
    restarts: int = 8
    tol: float = 1e-6
    mu0: float = 1e2
    mu_growth: float = 10.0
    stages: int = 5
    eps: float = 1e-8
    maxiter: int = 2000
    workers: int = 1

    def __post_init__(self):
        if self.steps < 4:
            raise DomainError(f"steps must be at least 4, got {self.steps}")
        if self.restarts < 1:
            raise DomainError(f"restarts must be at least 1, got {self.restarts}")
        if not self.tol > 0:
            raise DomainError(f"tol must be positive, got {self.tol}")
        if self.stages < 1 or not self.mu0 > 0 or not self.mu_growth > 1:
            raise DomainError("penalty schedule needs stages >= 1, mu0 > 0, mu_growth > 1")

    @classmethod
    def from_config(cls) -> "SolverParams":
        return cls(
            steps=Config.CC_STEPS,
            restarts=Config.CC_RESTARTS,
            tol=Config.CC_TOL,
            mu0=Config.CC_MU0,
            mu_growth=Config.CC_MU_GROWTH,
            stages=Config.CC_STAGES,
            eps=Config.CC_EPS,
            maxiter=Config.CC_MAXITER,
            workers=Config.WORKERS,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class HorizontalPath:
    """
    Piecewise-constant controls on [0, 1].

    controls has shape (N, 4n): row i is the coefficient vector on the
    horizontal frame during [knots[i], knots[i+1]]. Knots default to the
    uniform grid.
    """
    controls: NDArray[np.float64]
    knots: Optional[NDArray[np.float64]] = None

    def __post_init__(self):
        controls = np.asarray(self.controls, dtype=np.float64)
        if controls.ndim != 2 or controls.shape[0] < 1 or controls.shape[1] % 4:
            raise DimensionError(f"Controls must have shape (N, 4n), got {controls.shape}")
        if self.knots is None:
            knots = np.linspace(0.0, 1.0, controls.shape[0] + 1)
        else:
            knots = np.asarray(self.knots, dtype=np.float64)
            if knots.shape != (controls.shape[0] + 1,) or np.any(np.diff(knots) < 0):
                raise DimensionError("Knots must be N+1 non-decreasing values")
        object.__setattr__(self, 'controls', controls)
        object.__setattr__(self, 'knots', knots)

    @property
    def steps(self) -> int:
        return self.controls.shape[0]

    @property
    def n(self) -> int:
        return self.controls.shape[1] // 4

    @property
    def durations(self) -> NDArray[np.float64]:
        return np.diff(self.knots)

    def quaternion_controls(self) -> NDArray[np.float64]:
        return self.controls.reshape(self.steps, self.n, 4)

    def speeds(self) -> NDArray[np.float64]:
        return np.linalg.norm(self.controls, axis=-1)

    def length(self) -> float:
        return float(np.sum(self.durations * self.speeds()))

    def reversed(self) -> "HorizontalPath":
        """Path from the identity to the inverse endpoint."""
        return HorizontalPath(-self.controls[::-1], 1.0 - self.knots[::-1])

    def reparameterized(self) -> "HorizontalPath":
        """Same curve at constant speed (equal to its length)."""
        segment_lengths = self.durations * self.speeds()
        total = float(np.sum(segment_lengths))
        if total == 0.0:
            return self
        new_durations = segment_lengths / total
        knots = np.concatenate([[0.0], np.cumsum(new_durations)])
        knots[-1] = 1.0
        speeds = self.speeds()
        controls = np.zeros_like(self.controls)
        moving = speeds > 0
        controls[moving] = total * self.controls[moving] / speeds[moving, None]
        return HorizontalPath(controls, knots)

    def to_dict(self) -> Dict[str, Any]:
        return {"controls": self.controls.tolist(), "knots": self.knots.tolist(), "steps": self.steps}


@dataclass
class CCResult:
    """Outcome of one distance computation."""
    distance: float
    path: HorizontalPath
    endpoint_error: float
    iterations: int
    converged: bool
    target: Optional[GroupElement] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "distance": self.distance,
            "endpoint_error": self.endpoint_error,
            "iterations": self.iterations,
            "converged": self.converged,
            "target": self.target.to_json() if self.target is not None else None,
            "path": self.path.to_dict(),
        }


def horizontal_velocity(point: GroupElement,
                        control: NDArray[np.float64]) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Velocity of the left-invariant horizontal field with coefficients `control` at `point`."""
    control = np.asarray(control, dtype=np.float64)
    if control.shape[-2:] != point.u.shape[-2:]:
        raise DimensionError(f"Control shape {control.shape} does not match point with n={point.n}")
    return control, 2.0 * qim(dot_bar(control, point.u))


def _rk4_step(point: GroupElement, control: NDArray[np.float64], h: float) -> GroupElement:
    def shifted(k, scale):
        return GroupElement(point.u + scale * k[0], point.t + scale * k[1])

    k1 = horizontal_velocity(point, control)
    k2 = horizontal_velocity(shifted(k1, h / 2), control)
    k3 = horizontal_velocity(shifted(k2, h / 2), control)
    k4 = horizontal_velocity(shifted(k3, h), control)
    du = (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) * (h / 6)
    dt = (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) * (h / 6)
    return GroupElement(point.u + du, point.t + dt)


def develop_trajectory(path: HorizontalPath, n: int = None) -> List[GroupElement]:
    """
    Points gamma(s_0), ..., gamma(s_N) at the knots, from the identity.

    One classical RK4 step per control interval; t is quadratic in s on each
    interval, so the step is exact up to rounding.
    """
    n = path.n if n is None else n
    if path.controls.shape[1] != 4 * n:
        raise DimensionError(f"Controls have dimension {path.controls.shape[1]}, expected {4 * n} for n={n}")
    point = GroupElement.identity(n)
    trajectory = [point]
    for control, h in zip(path.quaternion_controls(), path.durations):
        point = _rk4_step(point, control, float(h))
        trajectory.append(point)
    return trajectory


def develop(path: HorizontalPath, n: int = None) -> GroupElement:
    """Endpoint gamma(1) of the developed path."""
    return develop_trajectory(path, n)[-1]


class _Transcription:
    """
    Closed-form endpoint, objective and derivatives for uniform-knot controls.

    With x_i the horizontal position at knot i and h the step,
    x_N = h sum a_i and t_N,k = 2 h sum_i a_i^T B_k x_i.
    """

    def __init__(self, target: GroupElement, steps: int, eps: float):
        self.n = target.n
        self.steps = steps
        self.h = 1.0 / steps
        self.eps = eps
        self.target_u = target.u
        self.target_t = target.t
        self.forms = np.stack(imag_bilinear_forms())  # (3, 4, 4)

    def unpack(self, flat: NDArray[np.float64]) -> NDArray[np.float64]:
        return flat.reshape(self.steps, self.n, 4)

    def positions(self, controls: NDArray[np.float64]) -> NDArray[np.float64]:
        # Exclusive prefix sums: x_i = h * sum_{j<i} a_j
        cumulative = np.cumsum(controls, axis=0) * self.h
        return np.concatenate([np.zeros((1, self.n, 4)), cumulative[:-1]], axis=0)

    def endpoint(self, controls: NDArray[np.float64]) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        x = self.positions(controls)
        u_end = self.h * np.sum(controls, axis=0)
        t_end = 2.0 * self.h * np.einsum('inp,kpq,inq->k', controls, self.forms, x)
        return u_end, t_end

    def center_gradients(self, controls: NDArray[np.float64]) -> NDArray[np.float64]:
        """d t_N,k / d a_i, shape (3, N, n, 4)."""
        x = self.positions(controls)
        # Exclusive suffix sums y_i = h * sum_{j>i} a_j
        total = self.h * np.sum(controls, axis=0)
        y = total[None] - x - self.h * controls
        return 2.0 * self.h * np.einsum('kpq,inq->kinp', self.forms, x - y)

    def residual(self, controls: NDArray[np.float64]) -> NDArray[np.float64]:
        u_end, t_end = self.endpoint(controls)
        return np.concatenate([(u_end - self.target_u).ravel(), t_end - self.target_t])

    def jacobian(self, controls: NDArray[np.float64]) -> NDArray[np.float64]:
        size = self.steps * self.n * 4
        horizontal = np.tile(self.h * np.eye(self.n * 4), (1, self.steps))
        center = self.center_gradients(controls).reshape(3, size)
        return np.vstack([horizontal, center])

    def objective(self, flat: NDArray[np.float64], mu: float) -> Tuple[float, NDArray[np.float64]]:
        controls = self.unpack(flat)
        speeds = np.sqrt(np.sum(controls * controls, axis=(-2, -1)) + self.eps)
        length = self.h * float(np.sum(speeds))
        grad = self.h * controls / speeds[:, None, None]

        u_end, t_end = self.endpoint(controls)
        du = u_end - self.target_u
        dt = t_end - self.target_t
        penalty = mu * (float(np.sum(du * du)) + float(np.sum(dt * dt)))
        grad = grad + 2.0 * mu * self.h * du[None]
        grad = grad + 2.0 * mu * np.einsum('k,kinp->inp', dt, self.center_gradients(controls))
        return length + penalty, grad.ravel()


def endpoint_jacobian(path: HorizontalPath) -> NDArray[np.float64]:
    """
    Derivative of the endpoint (u, t) with respect to the flattened controls,
    shape (4n+3, N*4n). Defined for uniform knots.
    """
    if not np.allclose(path.durations, 1.0 / path.steps, rtol=0.0, atol=1e-15):
        raise DomainError("endpoint_jacobian needs uniform knots")
    problem = _Transcription(GroupElement.identity(path.n), path.steps, 0.0)
    return problem.jacobian(path.quaternion_controls())


def _restore_feasibility(problem: _Transcription, flat: NDArray[np.float64],
                         iterations: int = 30) -> NDArray[np.float64]:
    """Minimum-norm Gauss-Newton corrections onto develop(controls) = target."""
    best = flat
    best_error = float(np.linalg.norm(problem.residual(problem.unpack(flat))))
    for _ in range(iterations):
        if best_error < 1e-14:
            break
        controls = problem.unpack(best)
        step, *_ = np.linalg.lstsq(problem.jacobian(controls), problem.residual(controls), rcond=None)
        candidate = best - step
        error = float(np.linalg.norm(problem.residual(problem.unpack(candidate))))
        if not error < best_error:
            break
        best, best_error = candidate, error
    return best


def _minimize_stage(problem: _Transcription, flat: NDArray[np.float64],
                    mu: float, maxiter: int) -> Tuple[NDArray[np.float64], int]:
    result = minimize(problem.objective, flat, args=(mu,), jac=True, method='L-BFGS-B',
                      options={'maxiter': maxiter})
    if result.success or result.status == 1:
        return result.x, int(result.nit)

    # Line search breakdown: fall back to a derivative-free direction-set search
    logger.debug(f"L-BFGS-B stopped ({result.message}); falling back to Powell at mu={mu:g}")
    fallback = minimize(lambda z: problem.objective(z, mu)[0], result.x, method='Powell',
                        options={'maxiter': maxiter, 'xtol': 1e-10, 'ftol': 1e-12})
    better = fallback.x if fallback.fun <= result.fun else result.x
    return better, int(result.nit) + int(fallback.nit)


def _solve_restart(problem: _Transcription, params: SolverParams,
                   seed_seq: np.random.SeedSequence, index: int) -> CCResult:
    rng = np.random.default_rng(seed_seq)
    shape = (problem.steps, problem.n, 4)
    if index == 0:
        # Straight-line guess toward the horizontal part, lightly perturbed
        flat = (np.broadcast_to(problem.target_u, shape) + 0.1 * rng.standard_normal(shape)).ravel()
    else:
        flat = rng.standard_normal(shape).ravel()

    iterations = 0
    with LogContext(restart=index):
        for stage in range(params.stages):
            mu = params.mu0 * params.mu_growth ** stage
            flat, nit = _minimize_stage(problem, flat, mu, params.maxiter)
            iterations += nit
            error = float(np.linalg.norm(problem.residual(problem.unpack(flat))))
            logger.debug(f"stage {stage} mu={mu:g}: endpoint error {error:.3e}")
            if error <= params.tol and stage > 0:
                break

        flat = _restore_feasibility(problem, flat)

    path = HorizontalPath(flat.reshape(problem.steps, problem.n * 4))
    error = float(np.linalg.norm(problem.residual(problem.unpack(flat))))
    return CCResult(
        distance=path.length(),
        path=path,
        endpoint_error=error,
        iterations=iterations,
        converged=error <= params.tol,
    )


def _select(results: List[CCResult]) -> CCResult:
    # Converged runs first, then shortest; ties keep the lowest restart index
    converged = [r for r in results if r.converged]
    if converged:
        return min(converged, key=lambda r: r.distance)
    return min(results, key=lambda r: r.endpoint_error)


def _prefers_inverse(target: GroupElement) -> bool:
    # d(v) = d(v^-1): solve for whichever of v, v^-1 has a positive first nonzero coordinate
    coords = target.coordinates()
    nonzero = np.flatnonzero(coords)
    return bool(nonzero.size) and coords[nonzero[0]] < 0


@sentry_trace(op="optimize", description="CC distance")
def cc_distance(target: GroupElement, steps: int = None, restarts: int = None,
                seed: int = 0, tol: float = None,
                params: Optional[SolverParams] = None, canonicalize: bool = True) -> CCResult:
    """
    Carnot-Caratheodory distance from the identity to `target`.

    The problem is solved on the Koranyi unit sphere (the target is dilated
    by 1/||target||_K and the result scaled back, since the distance is
    homogeneous of degree 1) and for the one of target, target^-1 whose first
    nonzero coordinate is positive (the path for the other is the reversed
    path). Each restart runs the penalty schedule from its own seeded
    initialization; the best converged restart wins.

    With `canonicalize=False` the target is solved as given, which makes
    symmetry and scaling checks compare independent solves.

    Args:
        target: single group element
        steps: control intervals (>= 4)
        restarts: independent initializations
        seed: base seed for the restarts
        tol: endpoint tolerance defining convergence
        params: remaining solver settings (defaults from Config)
        canonicalize: solve on the unit sphere for the preferred of target, target^-1

    Returns:
        CCResult; `converged` is False when no restart met the tolerance.
    """
    params = params or SolverParams.from_config()
    overrides = {key: value for key, value in
                 (('steps', steps), ('restarts', restarts), ('tol', tol)) if value is not None}
    params = replace(params, **overrides)
    if target.batch_shape:
        raise DimensionError("cc_distance takes a single target")

    scale = float(koranyi(target))
    if scale == 0.0:
        path = HorizontalPath(np.zeros((params.steps, 4 * target.n)))
        return CCResult(distance=0.0, path=path, endpoint_error=0.0, iterations=0,
                        converged=True, target=target)

    flipped = canonicalize and _prefers_inverse(target)
    canonical = ginv(target) if flipped else target
    factor = scale if canonicalize else 1.0
    normalized = dilate(1.0 / factor, canonical)
    problem = _Transcription(normalized, params.steps, params.eps)

    children = np.random.SeedSequence(seed).spawn(params.restarts)
    with ThreadPoolExecutor(max_workers=params.workers) as pool:
        results = list(pool.map(
            lambda job: _solve_restart(problem, params, job[1], job[0]),
            enumerate(children)
        ))
    best = _select(results)

    path = HorizontalPath(best.path.controls * factor)
    if flipped:
        path = path.reversed()
    path = path.reparameterized()
    endpoint = develop(path, target.n)
    error = float(np.linalg.norm(np.concatenate([
        (endpoint.u - target.u).ravel(), endpoint.t - target.t
    ])))
    converged = best.converged and error <= params.tol

    if not converged:
        logger.warning(f"CC solver did not reach tol={params.tol:g}: endpoint error {error:.3e}")
    return CCResult(
        distance=path.length(),
        path=path,
        endpoint_error=error,
        iterations=best.iterations,
        converged=converged,
        target=target,
    )


def cc_distance_between(a: GroupElement, b: GroupElement, **kwargs) -> CCResult:
    """d(a, b) = d(identity, a^-1 b) by left invariance."""
    return cc_distance(gmul(ginv(a), b), **kwargs)


@dataclass
class GaugeComparison:
    """Observed range of d_cc / ||.||_K over Koranyi-unit-sphere targets."""
    min_ratio: float
    max_ratio: float
    samples: int
    excluded: int
    seed: int
    ratios: List[float] = field(default_factory=list)
    refined: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "samples": self.samples,
            "excluded": self.excluded,
            "seed": self.seed,
            "refined": self.refined,
        }


def _split_angle(target: GroupElement) -> float:
    """atan2(|t|, |u|^2); invariant under dilation, 0 horizontal and pi/2 central."""
    return math.atan2(float(np.linalg.norm(target.t)), float(np.sum(target.u ** 2)))


def _with_split_angle(target: GroupElement, angle: float) -> GroupElement:
    """The Koranyi-unit point with the directions of `target` and the given split angle."""
    u_norm = float(np.linalg.norm(target.u))
    t_norm = float(np.linalg.norm(target.t))
    u_dir = target.u / u_norm if u_norm > 0 else np.eye(1, 4 * target.n).reshape(target.n, 4)
    t_dir = target.t / t_norm if t_norm > 0 else np.eye(1, 3).ravel()
    u = math.sqrt(max(math.cos(angle), 0.0)) * u_dir
    return project_to_sphere(KORANYI, GroupElement(u, math.sin(angle) * t_dir))


def _refine_ratio(target: GroupElement, ratio: float, seed: int, solver: SolverParams,
                  maximize: bool, max_sweeps: int, min_step: float = 1e-3) -> float:
    """
    Hill climb of d_cc / ||.||_K along the split angle through `target`.

    Each sweep solves the two neighbours at +-step; a strict improvement
    moves there, otherwise the step is halved. Unconverged solves never win.
    """
    sign = -1.0 if maximize else 1.0
    angle = _split_angle(target)
    current = sign * ratio
    step = 0.1

    for sweep in range(max_sweeps):
        trials = {min(max(angle + delta, 0.0), math.pi / 2) for delta in (-step, step)} - {angle}
        best_angle, best_value = angle, current
        for trial in sorted(trials):
            candidate = _with_split_angle(target, trial)
            with LogContext(target=f"refine@{trial:.4f}"):
                result = cc_distance(candidate, seed=seed, params=solver)
            if not result.converged:
                continue
            value = sign * result.distance / float(koranyi(candidate))
            if value < best_value:
                best_angle, best_value = trial, value
        if best_value < current:
            angle, current = best_angle, best_value
        else:
            step *= 0.5
            if step < min_step:
                break

    logger.debug(f"Ratio refinement finished after {sweep + 1} sweeps at angle {angle:.6f}: {sign * current:.6f}")
    return sign * current


@sentry_trace(op="optimize", description="CC vs Koranyi comparison")
def compare_to_gauge(samples: int, seed: int, solver: Optional[SolverParams] = None,
                     n: int = 1, refine: bool = True, refine_sweeps: int = 40) -> GaugeComparison:
    """
    Range of cc_distance / koranyi over random targets on the Koranyi sphere.

    Targets whose solve did not converge are excluded and counted. With
    `refine`, the smallest and largest sampled ratios are pushed further by
    a hill climb over the split between horizontal and central size, keeping
    the directions of u and t; the ratio is constant along the remaining
    directions at n = 1, so the reported interval converges instead of
    tracking the extremes of the draw.
    """
    if samples < 1:
        raise DomainError(f"samples must be at least 1, got {samples}")
    if refine and refine_sweeps < 1:
        raise DomainError(f"refine_sweeps must be at least 1, got {refine_sweeps}")
    solver = solver or SolverParams.from_config()
    rng = np.random.default_rng(seed)
    targets = project_to_sphere(KORANYI, random_unit_directions(rng, n, samples))
    target_seeds = np.random.SeedSequence(seed).generate_state(samples)

    ratios = []
    kept = []
    excluded = 0
    for index in range(samples):
        target = targets[index]
        with LogContext(target=index):
            result = cc_distance(target, seed=int(target_seeds[index]), params=solver)
        if not result.converged:
            excluded += 1
            continue
        ratios.append(result.distance / float(koranyi(target)))
        kept.append(index)

    if not ratios:
        logger.warning("No CC solve converged; comparison is empty")
        return GaugeComparison(math.nan, math.nan, samples, excluded, seed, [])

    min_ratio, max_ratio = min(ratios), max(ratios)
    if refine:
        # First occurrence wins ties
        low, high = int(np.argmin(ratios)), int(np.argmax(ratios))
        min_ratio = _refine_ratio(targets[kept[low]], min_ratio, int(target_seeds[kept[low]]),
                                  solver, False, refine_sweeps)
        max_ratio = _refine_ratio(targets[kept[high]], max_ratio, int(target_seeds[kept[high]]),
                                  solver, True, refine_sweeps)

    logger.info(f"CC/Koranyi ratio range [{min_ratio:.6f}, {max_ratio:.6f}] "
                f"over {len(ratios)} targets ({excluded} excluded)")
    return GaugeComparison(
        min_ratio=min_ratio,
        max_ratio=max_ratio,
        samples=samples,
        excluded=excluded,
        seed=seed,
        ratios=ratios,
        refined=refine,
    )
