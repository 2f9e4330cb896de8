"""Sparse unit vectors and the sphere metrics the sign embeddings preserve.

Distances are normalized so antipodal points sit at distance 1:

    d(x, y)       = arccos(<x, y>) / pi
    d_sigma(x, y) = arccos((<x, y> + sigma^2) / (1 + sigma^2)) / pi

``d_sigma`` is the metric a sign embedding converges to when independent
N(0, sigma^2) noise is added to each linear measurement before quantization.
It equals the plain geodesic distance between the noise-lifted points
``lift(x, sigma)`` and ``lift(y, sigma)`` one dimension up, which is also how
this module proves to itself that ``d_sigma`` is a metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stochastics import RngStream, gaussian_vector

#: Unit-norm gate for constructors.
NORM_TOL = 1e-9
#: Inner products may exceed [-1, 1] by at most this much before erroring.
INNER_OVERSHOOT_TOL = 1e-12


@dataclass(frozen=True)
class NoiseModel:
    """Additive white noise level; sigma = 0 is the noiseless model."""

    sigma: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"sigma must be a finite nonnegative real, got {self.sigma}")


class UnitVector:
    """A point on the unit sphere, optionally with a declared sparse support.

    Construction rejects vectors whose norm strays from 1 by more than
    ``NORM_TOL`` instead of silently renormalizing; use :meth:`normalize`
    when scaling is intended.  When a support is declared, coordinates off
    the support must be exactly zero.  Instances are immutable.
    """

    __slots__ = ("_coords", "_support")

    def __init__(self, coords: np.ndarray, support: frozenset[int] | None = None):
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim != 1 or coords.size == 0:
            raise ValueError("coords must be a nonempty 1-d array")
        norm = float(np.linalg.norm(coords))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"|norm - 1| = {abs(norm - 1.0):.3e} exceeds {NORM_TOL}")
        if support is not None:
            support = frozenset(int(i) for i in support)
            if support and (min(support) < 0 or max(support) >= coords.size):
                raise ValueError("support indices out of range")
            off = np.ones(coords.size, dtype=bool)
            off[list(support)] = False
            if np.any(coords[off] != 0.0):
                raise ValueError("coords must vanish exactly off the declared support")
        coords = coords.copy()
        coords.flags.writeable = False
        object.__setattr__(self, "_coords", coords)
        object.__setattr__(self, "_support", support)

    @classmethod
    def normalize(cls, coords: np.ndarray, support: frozenset[int] | None = None) -> "UnitVector":
        """Scale ``coords`` to unit length, then construct."""
        coords = np.asarray(coords, dtype=np.float64)
        norm = float(np.linalg.norm(coords))
        if norm == 0.0 or not np.isfinite(norm):
            raise ValueError("cannot normalize a zero or non-finite vector")
        return cls(coords / norm, support=support)

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    @property
    def support(self) -> frozenset[int] | None:
        return self._support

    @property
    def dim(self) -> int:
        return self._coords.size

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self._coords))

    def __neg__(self) -> "UnitVector":
        return UnitVector(-self._coords, support=self._support)

    def __repr__(self) -> str:
        return f"UnitVector(dim={self.dim}, nnz={self.nnz})"


def sample_sparse_unit(stream: RngStream, n: int, s: int) -> UnitVector:
    """Uniformly chosen s-subset support, iid normal coefficients, normalized.

    The result is an s-sparse unit vector; the all-zero draw (probability
    zero) is resampled.
    """
    if s < 1 or s > n:
        raise ValueError(f"sparsity must satisfy 1 <= s <= n, got s={s}, n={n}")
    support = stream.generator.choice(n, size=s, replace=False)
    while True:
        coeffs = gaussian_vector(stream, s)
        norm = float(np.linalg.norm(coeffs))
        if norm > 0.0:
            break
    coords = np.zeros(n, dtype=np.float64)
    coords[support] = coeffs / norm
    return UnitVector(coords, support=frozenset(int(i) for i in support))


def _checked_inner(x: UnitVector, y: UnitVector) -> float:
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    return float(np.dot(x.coords, y.coords))


def _clamped(value, tol: float = INNER_OVERSHOOT_TOL):
    arr = np.asarray(value, dtype=np.float64)
    if np.any(np.abs(arr) > 1.0 + tol):
        worst = float(np.max(np.abs(arr)))
        raise ValueError(f"inner product magnitude {worst} exceeds 1 by more than {tol}")
    return np.clip(arr, -1.0, 1.0)


def geodesic_from_inner(rho) -> np.ndarray | float:
    """Normalized geodesic distance as a function of the inner product."""
    out = np.arccos(_clamped(rho)) / np.pi
    return float(out) if np.isscalar(rho) else out


def distorted_from_inner(rho, sigma: float) -> np.ndarray | float:
    """Noise-distorted distance as a function of the inner product."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    s2 = sigma * sigma
    out = np.arccos(_clamped((np.asarray(rho, dtype=np.float64) + s2) / (1.0 + s2))) / np.pi
    return float(out) if np.isscalar(rho) else out


def geodesic_distance(x: UnitVector, y: UnitVector) -> float:
    """d(x, y) = arccos(<x, y>) / pi, in [0, 1]."""
    return geodesic_from_inner(_checked_inner(x, y))


def distorted_distance(x: UnitVector, y: UnitVector, noise: NoiseModel) -> float:
    """d_sigma(x, y); reduces to the geodesic distance at sigma = 0."""
    return distorted_from_inner(_checked_inner(x, y), noise.sigma)


def lift(x: UnitVector, noise: NoiseModel) -> UnitVector:
    """Append coordinate sigma and rescale by 1/sqrt(1 + sigma^2).

    The lifted points satisfy <lift(x), lift(y)> = (<x, y> + sigma^2) /
    (1 + sigma^2), so distorted distances downstairs are plain geodesic
    distances upstairs.  Sparsity grows by at most one.
    """
    sigma = noise.sigma
    scale = 1.0 / np.sqrt(1.0 + sigma * sigma)
    coords = np.concatenate([x.coords * scale, [sigma * scale]])
    support = x.support
    if support is not None and sigma > 0.0:
        support = support | {x.dim}
    return UnitVector(coords, support=support)


def disagreement_probability(rho: float) -> float:
    """Probability two unit-variance jointly Gaussian signs disagree.

    For sign(Z1), sign(Z2) with correlation rho this is arccos(rho) / pi,
    the measure of the wedge between the two hemispheres.
    """
    return geodesic_from_inner(rho)


def antipodal_gap(noise: NoiseModel) -> float:
    """sup over the sphere of d - d_sigma, attained at antipodal pairs.

    Equals 1 - arccos((sigma^2 - 1) / (sigma^2 + 1)) / pi; zero when
    sigma = 0 and 1/2 at sigma = 1.
    """
    s2 = noise.sigma * noise.sigma
    return 1.0 - float(np.arccos((s2 - 1.0) / (s2 + 1.0))) / np.pi
