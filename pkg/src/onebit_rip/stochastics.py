"""Deterministic splittable randomness and small statistical helpers.

Random streams are keyed Philox counters: a stream is fully determined by a
64-bit seed and a 64-bit stream id, and distinct stream ids share no state,
so independent tasks (trials, restarts) each get their own id.  Gaussian
variates are produced by Box-Muller applied to 64-bit uniform words, which
keeps the sampling recipe explicit and portable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

_U64_MAX = 2**64
_INV_2_53 = 2.0 ** -53


def _check_u64(value: int, name: str) -> int:
    value = int(value)
    if not 0 <= value < _U64_MAX:
        raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {value}")
    return value


@dataclass
class RngStream:
    """A single-owner random stream identified by (seed, stream_id).

    Drawing from a stream advances it.  Recreating a stream from the same
    (seed, stream_id) replays the identical sequence.  Streams with distinct
    ids under one seed are independent Philox instances; they may be consumed
    by parallel tasks without coordination.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.seed = _check_u64(self.seed, "seed")
        self.stream_id = _check_u64(self.stream_id, "stream_id")

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            key = np.array([self.seed, self.stream_id], dtype=np.uint64)
            self._gen = np.random.Generator(np.random.Philox(key=key))
        return self._gen


def uniform_words(stream: RngStream, count: int) -> np.ndarray:
    """``count`` raw 64-bit uniform words from the stream."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    return stream.generator.integers(0, _U64_MAX, size=count, dtype=np.uint64)


def gaussian_vector(stream: RngStream, dim: int) -> np.ndarray:
    """iid standard normal draws via Box-Muller on 64-bit uniforms.

    Layout is fixed: for ``h = ceil(dim/2)`` pairs, the first h outputs are
    the cosine branch and the next h the sine branch, truncated to ``dim``.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    half = (dim + 1) // 2
    w1 = uniform_words(stream, half)
    w2 = uniform_words(stream, half)
    # (0, 1] for the log argument, [0, 1) for the angle
    u1 = ((w1 >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
    u2 = (w2 >> np.uint64(11)).astype(np.float64) * _INV_2_53
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = (2.0 * np.pi) * u2
    out = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
    return out[:dim]


def binomial_ci(successes: int, trials: int, z: float) -> tuple[float, float]:
    """Normal-approximation confidence interval for a binomial proportion.

    Returns ``p_hat +/- z * sqrt(p_hat (1 - p_hat) / trials)`` clamped to
    [0, 1].  Intended for the large-trial regimes of this harness, where the
    approximation error is negligible against the tolerances in use.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    if not z > 0:
        raise ValueError("z must be positive")
    p_hat = successes / trials
    half = z * math.sqrt(p_hat * (1.0 - p_hat) / trials)
    return (max(0.0, p_hat - half), min(1.0, p_hat + half))


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares line through log-log points, with goodness of fit."""

    slope: float
    intercept: float
    r_squared: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.r_squared) and -1e-9 <= self.r_squared <= 1 + 1e-9):
            raise ValueError(f"r_squared out of [0, 1]: {self.r_squared}")


def fit_loglog_slope(points: Sequence[tuple[float, float]]) -> SlopeFit:
    """Fit ``log y = slope * log x + intercept`` by least squares.

    Requires at least two points with distinct abscissae and strictly
    positive coordinates.  An exact power law comes back with r_squared 1.
    """
    if len(points) < 2:
        raise ValueError("need at least 2 points")
    xs = np.asarray([p[0] for p in points], dtype=np.float64)
    ys = np.asarray([p[1] for p in points], dtype=np.float64)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("all coordinates must be strictly positive")
    if np.unique(xs).size < 2:
        raise ValueError("need at least 2 distinct x values")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(np.dot(resid, resid))
    ss_tot = float(np.dot(ly - ly.mean(), ly - ly.mean()))
    if ss_tot == 0.0:
        # constant y: a zero-slope line fits exactly
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return SlopeFit(slope=float(slope), intercept=float(intercept), r_squared=r2)
