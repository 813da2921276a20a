"""
The quaternionic Heisenberg group H^n x R^3.

Group law (u, t)(r, s) = (u + r, t + s + 2 Im(r·ū)), inverse (-u, -t),
dilations delta_rho(u, t) = (rho u, rho^2 t). A GroupElement may carry a
leading batch shape; every operation here broadcasts over it.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from typing import Any, Dict, List, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from config import Config
from errors import DimensionError, DomainError
from quaternion_core import dot_bar, qim
from sentry_config import sentry_trace

logger = logging.getLogger(__name__)

Scale = Union[float, NDArray[np.float64]]


@dataclass(frozen=True, eq=False)
class GroupElement:
    """
    A point (u, t): u is an n-tuple of quaternions, t a vector in R^3.

    Shapes: u is (..., n, 4) and t is (..., 3) with matching leading
    batch shape.
    """
    u: NDArray[np.float64]
    t: NDArray[np.float64]

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        t = np.asarray(self.t, dtype=np.float64)
        if u.ndim < 2 or u.shape[-1] != 4 or u.shape[-2] < 1:
            raise DimensionError(f"Horizontal part must have shape (..., n, 4), got {u.shape}")
        if t.shape[-1:] != (3,):
            raise DimensionError(f"Center part must have shape (..., 3), got {t.shape}")
        if u.shape[:-2] != t.shape[:-1]:
            raise DimensionError(
                f"Batch shapes differ: horizontal {u.shape[:-2]} vs center {t.shape[:-1]}"
            )
        object.__setattr__(self, 'u', u)
        object.__setattr__(self, 't', t)

    @classmethod
    def identity(cls, n: int = 1) -> "GroupElement":
        if n < 1:
            raise DimensionError(f"n must be at least 1, got {n}")
        return cls(np.zeros((n, 4)), np.zeros(3))

    @classmethod
    def from_coordinates(cls, coords: ArrayLike, n: int) -> "GroupElement":
        """Inverse of `coordinates()`: flat (..., 4n+3) vectors to points."""
        coords = np.asarray(coords, dtype=np.float64)
        if coords.shape[-1] != 4 * n + 3:
            raise DimensionError(f"Expected {4 * n + 3} coordinates for n={n}, got {coords.shape[-1]}")
        u = coords[..., :4 * n].reshape(coords.shape[:-1] + (n, 4))
        return cls(u, coords[..., 4 * n:])

    @property
    def n(self) -> int:
        return self.u.shape[-2]

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.t.shape[:-1]

    def __len__(self) -> int:
        if not self.batch_shape:
            raise TypeError("A single GroupElement has no length")
        return self.batch_shape[0]

    def __getitem__(self, index) -> "GroupElement":
        if not self.batch_shape:
            raise TypeError("A single GroupElement cannot be indexed")
        return GroupElement(self.u[index], self.t[index])

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return gmul(self, other)

    def inverse(self) -> "GroupElement":
        return ginv(self)

    def coordinates(self) -> NDArray[np.float64]:
        """Flat coordinates (u_1 .. u_n, t), shape (..., 4n+3)."""
        flat_u = self.u.reshape(self.batch_shape + (4 * self.n,))
        return np.concatenate([flat_u, self.t], axis=-1)

    def horizontal_norm(self) -> NDArray[np.float64]:
        return np.sqrt(np.sum(self.u * self.u, axis=(-2, -1)))

    def center_norm(self) -> NDArray[np.float64]:
        return np.sqrt(np.sum(self.t * self.t, axis=-1))

    def is_identity(self) -> NDArray[np.bool_]:
        return np.all(self.coordinates() == 0.0, axis=-1)

    def allclose(self, other: "GroupElement", atol: float = 1e-10) -> bool:
        return bool(np.allclose(self.u, other.u, rtol=0.0, atol=atol)
                    and np.allclose(self.t, other.t, rtol=0.0, atol=atol))

    def to_json(self) -> Dict[str, Any]:
        """{"u": [[w,x,y,z], ...], "t": [t1,t2,t3]} for a single point."""
        if self.batch_shape:
            raise TypeError("Only single points are serialized; index the batch first")
        return {"u": self.u.tolist(), "t": self.t.tolist()}

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "GroupElement":
        return cls(np.asarray(data["u"], dtype=np.float64), np.asarray(data["t"], dtype=np.float64))

    def __repr__(self) -> str:
        if self.batch_shape:
            return f"GroupElement(batch={self.batch_shape}, n={self.n})"
        return f"GroupElement(u={self.u.tolist()}, t={self.t.tolist()})"


def _check_same_n(a: GroupElement, b: GroupElement):
    if a.n != b.n:
        raise DimensionError(f"Group elements live in different groups: n={a.n} vs n={b.n}")


def gmul(a: GroupElement, b: GroupElement) -> GroupElement:
    """Group product (a.u + b.u, a.t + b.t + 2 Im(b.u · conj(a.u)))."""
    _check_same_n(a, b)
    return GroupElement(a.u + b.u, a.t + b.t + 2.0 * qim(dot_bar(b.u, a.u)))


def ginv(a: GroupElement) -> GroupElement:
    """Two-sided inverse (-u, -t)."""
    return GroupElement(-a.u, -a.t)


def _check_rho(rho: Scale) -> NDArray[np.float64]:
    rho = np.asarray(rho, dtype=np.float64)
    if not np.all(rho > 0):
        raise DomainError(f"Dilation factor must be positive, got {rho}")
    return rho


def dilate(rho: Scale, a: GroupElement) -> GroupElement:
    """
    Dilation delta_rho(u, t) = (rho u, rho^2 t).

    `rho` may be a scalar or an array broadcastable against the batch shape.
    """
    rho = _check_rho(rho)
    return GroupElement(rho[..., None, None] * a.u, (rho * rho)[..., None] * a.t)


def dilate_sqrt_convention(rho: Scale, a: GroupElement) -> GroupElement:
    """The (sqrt(rho) u, rho t) form of the dilations, i.e. dilate(sqrt(rho), a)."""
    rho = _check_rho(rho)
    return dilate(np.sqrt(rho), a)


def homogeneous_dimension(n: int) -> int:
    """Exponent Q = 4n + 6 with vol(delta_rho E) = rho^Q vol(E)."""
    if n < 1:
        raise DimensionError(f"n must be at least 1, got {n}")
    return 4 * n + 6


def topological_dimension(n: int) -> int:
    return 4 * n + 3


def random_elements(rng: np.random.Generator, n: int, size: int) -> GroupElement:
    """Points with independent standard-normal coordinates."""
    return GroupElement(rng.standard_normal((size, n, 4)), rng.standard_normal((size, 3)))


def random_unit_directions(rng: np.random.Generator, n: int, size: int) -> GroupElement:
    """Points uniform on the Euclidean unit sphere of the 4n+3 coordinates."""
    coords = rng.standard_normal((size, topological_dimension(n)))
    coords /= np.linalg.norm(coords, axis=-1, keepdims=True)
    return GroupElement.from_coordinates(coords, n)


@dataclass
class HaarScalingResult:
    """Monte Carlo and analytic volume ratio vol(delta_rho B) / vol(B)."""
    rho: float
    n: int
    exponent: int
    empirical_ratio: float
    exact_ratio: float
    samples: int
    seed: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _window_edges(rho: float, n: int, margin: float) -> NDArray[np.float64]:
    # Bounding box of delta_rho([0,1]^(4n+3)), enlarged by the margin
    edges = np.concatenate([np.full(4 * n, rho), np.full(3, rho * rho)])
    return margin * edges


def _count_hits(seed_seq: np.random.SeedSequence, rho: float, n: int,
                size: int, margin: float) -> Tuple[int, int]:
    """Hits of the unit box and of its dilate, each sampled in its own window."""
    rng = np.random.default_rng(seed_seq)
    dim = topological_dimension(n)

    unit_window = _window_edges(1.0, n, margin)
    unit_points = rng.random((size, dim)) * unit_window
    unit_hits = int(np.count_nonzero(np.all(unit_points <= 1.0, axis=-1)))
    if rho == 1.0:
        # delta_1 is the identity: the dilate is the same region
        return unit_hits, unit_hits

    scaled_window = _window_edges(rho, n, margin)
    scaled_points = GroupElement.from_coordinates(rng.random((size, dim)) * scaled_window, n)
    pulled_back = dilate(1.0 / rho, scaled_points).coordinates()
    scaled_hits = int(np.count_nonzero(np.all(pulled_back <= 1.0, axis=-1)))

    return unit_hits, scaled_hits


@sentry_trace(op="montecarlo", description="Haar scaling check")
def haar_scaling_check(rho: float, n: int, samples: int, seed: int,
                       chunk_size: int = None, workers: int = None) -> HaarScalingResult:
    """
    Monte Carlo estimate of vol(delta_rho(B)) / vol(B) for the unit box B.

    Each region is sampled uniformly in its own enlarged bounding box; the
    volume of delta_rho(B) is measured by pulling samples back through
    delta_{1/rho}. Batches get independent child seeds, so the hit counts
    (and the result) depend only on (rho, n, samples, seed, chunk size).
    At rho = 1 both regions coincide and share one sample, so both ratios
    are exactly 1; for any other rho the two counts are independent and the
    empirical ratio carries Monte Carlo noise.

    Args:
        rho: dilation factor, > 0
        n: quaternionic dimension, >= 1
        samples: points per region, >= 1
        seed: RNG seed
        chunk_size: batch size (defaults to Config.CHUNK_SIZE)
        workers: threads (defaults to Config.WORKERS)

    Returns:
        HaarScalingResult with the empirical and exact (rho^(4n+6)) ratios.
    """
    _check_rho(rho)
    if samples < 1:
        raise DomainError(f"samples must be at least 1, got {samples}")
    exponent = homogeneous_dimension(n)
    chunk_size = chunk_size or Config.CHUNK_SIZE
    workers = workers or Config.WORKERS
    margin = Config.HAAR_MARGIN

    sizes: List[int] = [chunk_size] * (samples // chunk_size)
    if samples % chunk_size:
        sizes.append(samples % chunk_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    logger.info(f"Haar check rho={rho} n={n}: {samples} samples in {len(sizes)} batches")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        counts = list(pool.map(
            lambda job: _count_hits(job[0], rho, n, job[1], margin),
            zip(children, sizes)
        ))

    unit_hits = sum(c[0] for c in counts)
    scaled_hits = sum(c[1] for c in counts)
    if unit_hits == 0:
        raise DomainError("No Monte Carlo hits in the unit box; increase samples")

    unit_volume = float(np.prod(_window_edges(1.0, n, margin)))
    scaled_volume = float(np.prod(_window_edges(rho, n, margin)))
    empirical = (scaled_hits * scaled_volume) / (unit_hits * unit_volume)
    exact = float(rho) ** exponent

    logger.info(f"Haar check rho={rho} n={n}: empirical/exact = {empirical / exact:.6f}")
    return HaarScalingResult(
        rho=float(rho),
        n=n,
        exponent=exponent,
        empirical_ratio=empirical,
        exact_ratio=exact,
        samples=samples,
        seed=seed,
    )
