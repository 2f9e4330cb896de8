"""Deviation between Hamming distance and the sphere metrics, at scale.

The central quantity is |d_H(code(x), code(y)) - ref(x, y)| over sampled
pairs of s-sparse unit signals, where ref is the geodesic distance (clean
embeddings) or the distorted distance (noisy embeddings).  The supremum over
the whole sparse sphere is not computable, so pair samplers estimate it from
below with a handful of strategies, including near-antipodal and
epsilon-close pairs where the deviation behaves worst; every report is a
lower bound on the true supremum and says so.

Trials are independent tasks keyed by stream id, so multi-threaded sweeps
reproduce single-threaded output exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .embedding import NoiseVector, SensingMatrix, embed_batch, hamming_pair_counts
from .geometry import NoiseModel, antipodal_gap, distorted_from_inner, geodesic_from_inner
from .stochastics import RngStream, SlopeFit, fit_loglog_slope, gaussian_vector

STRATEGIES = ("iid-uniform", "shared-support", "disjoint-support", "near-antipodal", "epsilon-close", "mixed")

#: Sub-streams per trial: matrix, noise, pair sampling.
_STREAMS_PER_TRIAL = 4
_ROLE_MATRIX, _ROLE_NOISE, _ROLE_PAIRS = 0, 1, 2


def trial_stream_id(block: int, trial: int, trials: int, role: int) -> int:
    """Deterministic stream id for (grid block, trial, role)."""
    return ((block * trials) + trial) * _STREAMS_PER_TRIAL + role


@dataclass(frozen=True)
class PairBatch:
    """Sampled signals (unit rows) plus index pairs into them.

    Several pairs may reference the same signal row; embedding a batch
    therefore encodes every signal exactly once, and pair distances are
    computed on the cached codes.
    """

    signals: np.ndarray
    pairs: np.ndarray

    def correlations(self) -> np.ndarray:
        left = self.signals[self.pairs[:, 0]]
        right = self.signals[self.pairs[:, 1]]
        return np.einsum("ij,ij->i", left, right)


class PairSampler:
    """Generates batches of s-sparse unit-vector pairs by a named strategy.

    Strategies: ``iid-uniform`` (independent draws), ``shared-support``
    (same support, independent coefficients), ``disjoint-support`` (needs
    2s <= n), ``near-antipodal`` (exact geodesic distance 1 - offset),
    ``epsilon-close`` (exact geodesic distance epsilon; needs s >= 2) and
    ``mixed`` (round-robin over whichever of the others apply).
    """

    def __init__(
        self,
        strategy: str,
        n: int,
        s: int,
        count: int,
        epsilon: float | None = None,
        antipodal_offset: float = 0.005,
    ):
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
        if count < 1:
            raise ValueError("count must be >= 1")
        if s < 1 or s > n:
            raise ValueError(f"sparsity must satisfy 1 <= s <= n, got s={s}, n={n}")
        if strategy == "disjoint-support" and 2 * s > n:
            raise ValueError("disjoint-support needs 2s <= n")
        if strategy == "epsilon-close":
            if epsilon is None or not 0 < epsilon < 1:
                raise ValueError("epsilon-close needs epsilon in (0, 1)")
            if s < 2:
                raise ValueError("epsilon-close needs s >= 2 to rotate within the support")
        if not 0 < antipodal_offset < 1:
            raise ValueError("antipodal_offset must lie in (0, 1)")
        self.strategy = strategy
        self.n = n
        self.s = s
        self.count = count
        self.epsilon = epsilon if epsilon is not None else 0.05
        self.antipodal_offset = antipodal_offset

    def _mixed_cycle(self) -> list[str]:
        cycle = ["iid-uniform", "shared-support"]
        if 2 * self.s <= self.n:
            cycle.append("disjoint-support")
        cycle.append("near-antipodal")
        if self.s >= 2:
            cycle.append("epsilon-close")
        return cycle

    def sample(self, stream: RngStream) -> PairBatch:
        gen = stream.generator
        n, s = self.n, self.s
        if self.strategy == "mixed":
            cycle = self._mixed_cycle()
            kinds = [cycle[i % len(cycle)] for i in range(self.count)]
        else:
            kinds = [self.strategy] * self.count
        signals: list[np.ndarray] = []
        pairs = np.empty((self.count, 2), dtype=np.int64)
        for i, kind in enumerate(kinds):
            if kind == "iid-uniform":
                sup_x = gen.choice(n, size=s, replace=False)
                sup_y = gen.choice(n, size=s, replace=False)
                x = _sparse_unit(stream, n, sup_x)
                y = _sparse_unit(stream, n, sup_y)
            elif kind == "shared-support":
                sup = gen.choice(n, size=s, replace=False)
                x = _sparse_unit(stream, n, sup)
                y = _sparse_unit(stream, n, sup)
            elif kind == "disjoint-support":
                both = gen.choice(n, size=2 * s, replace=False)
                x = _sparse_unit(stream, n, both[:s])
                y = _sparse_unit(stream, n, both[s:])
            elif kind == "near-antipodal":
                sup = gen.choice(n, size=s, replace=False)
                x = _sparse_unit(stream, n, sup)
                y = -_rotated_within_support(stream, x, sup, math.pi * self.antipodal_offset)
            else:  # epsilon-close
                sup = gen.choice(n, size=s, replace=False)
                x = _sparse_unit(stream, n, sup)
                y = _rotated_within_support(stream, x, sup, math.pi * self.epsilon)
            pairs[i, 0] = len(signals)
            pairs[i, 1] = len(signals) + 1
            signals.append(x)
            signals.append(y)
        return PairBatch(signals=np.vstack(signals), pairs=pairs)


def _sparse_unit(stream: RngStream, n: int, support: np.ndarray) -> np.ndarray:
    while True:
        coeffs = gaussian_vector(stream, support.size)
        norm = float(np.linalg.norm(coeffs))
        if norm > 0.0:
            break
    out = np.zeros(n, dtype=np.float64)
    out[support] = coeffs / norm
    return out


def _rotated_within_support(stream: RngStream, x: np.ndarray, support: np.ndarray, angle: float) -> np.ndarray:
    """Unit vector at exact angle ``angle`` from x inside the support subspace.

    With s = 1 there is no orthogonal in-support direction and the rotation
    degenerates to x itself (callers combine this with negation to land on
    the exact antipode).
    """
    if support.size < 2:
        return x.copy()
    xs = x[support]
    while True:
        g = gaussian_vector(stream, support.size)
        g -= np.dot(g, xs) * xs
        norm = float(np.linalg.norm(g))
        if norm > 1e-12:
            break
    u = np.zeros_like(x)
    u[support] = g / norm
    return math.cos(angle) * x + math.sin(angle) * u


@dataclass(frozen=True)
class DeviationReport:
    """Aggregate |hamming - reference| over one sampled pair batch.

    ``sup_dev`` is the sampled maximum and therefore a lower bound on the
    true supremum over all s-sparse pairs.
    """

    sup_dev: float
    mean_dev: float
    q95_dev: float
    pairs: int
    m: int
    sigma: float
    metric: str
    seed: int
    stream_id: int

    def __post_init__(self) -> None:
        for name in ("sup_dev", "mean_dev", "q95_dev"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} out of [0, 1]: {v}")
        if not self.mean_dev <= self.q95_dev + 1e-15 or not self.q95_dev <= self.sup_dev + 1e-15:
            raise ValueError("deviation quantiles out of order: expected mean <= q95 <= sup")
        if self.metric not in ("geodesic", "distorted"):
            raise ValueError(f"metric must be 'geodesic' or 'distorted', got {self.metric!r}")


def required_measurements(delta: float, eps: float, s: int, n: int, C: float = 1.0) -> int:
    """ceil(C * delta^-2 * (ln(2/eps) + s ln(n/s))) measurements.

    The implied constant in the underlying bound is not pinned down by
    theory; C exposes it and defaults to 1 so that scaling, not absolute
    counts, is what gets tested.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not 1 <= s < n:
        raise ValueError("need 1 <= s < n")
    if not C > 0:
        raise ValueError("C must be positive")
    return math.ceil(C * delta**-2 * (math.log(2.0 / eps) + s * math.log(n / s)))


def _reference(rho: np.ndarray, sigma: float, metric: str) -> np.ndarray:
    if metric == "geodesic":
        return geodesic_from_inner(rho)
    return distorted_from_inner(rho, sigma)


def _pair_deviations(
    A: SensingMatrix,
    eta: NoiseVector | None,
    batch: PairBatch,
    sigma: float,
    metric: str,
    code_sink: Callable[[np.ndarray, int], None] | None = None,
) -> np.ndarray:
    codes = embed_batch(A, batch.signals, eta)
    if code_sink is not None:
        code_sink(codes, A.m)
    counts = hamming_pair_counts(codes, batch.pairs[:, 0], batch.pairs[:, 1])
    ref = _reference(batch.correlations(), sigma, metric)
    return np.abs(counts / A.m - ref)


def _report_from_devs(devs: np.ndarray, m: int, sigma: float, metric: str, stream: RngStream) -> DeviationReport:
    return DeviationReport(
        sup_dev=float(devs.max()),
        mean_dev=float(devs.mean()),
        q95_dev=float(np.quantile(devs, 0.95)),
        pairs=devs.size,
        m=m,
        sigma=sigma,
        metric=metric,
        seed=stream.seed,
        stream_id=stream.stream_id,
    )


def deviation(
    A: SensingMatrix,
    eta: NoiseVector | None,
    sampler: PairSampler,
    noise: NoiseModel,
    stream: RngStream,
    metric: str | None = None,
    code_sink: Callable[[np.ndarray, int], None] | None = None,
) -> DeviationReport:
    """Embed one sampled batch and aggregate |hamming - reference| per pair.

    The noise realization must be present exactly when sigma > 0.  The
    reference metric defaults to the one matching the noise level but may be
    forced to "geodesic" to measure how noisy embeddings miss the clean
    metric.
    """
    if (eta is None) != (noise.sigma == 0.0):
        raise ValueError("eta must be provided iff sigma > 0")
    if eta is not None and eta.m != A.m:
        raise ValueError("noise length does not match matrix")
    if sampler.n != A.n:
        raise ValueError(f"sampler dimension {sampler.n} does not match matrix n={A.n}")
    if metric is None:
        metric = "distorted" if noise.sigma > 0 else "geodesic"
    if metric not in ("geodesic", "distorted"):
        raise ValueError(f"metric must be 'geodesic' or 'distorted', got {metric!r}")
    batch = sampler.sample(stream)
    devs = _pair_deviations(A, eta, batch, noise.sigma, metric, code_sink)
    return _report_from_devs(devs, A.m, noise.sigma, metric, stream)


def rip_holds(report: DeviationReport, delta: float) -> bool:
    """Whether the sampled sup deviation stays within delta.

    Necessary-condition check only: the sampled supremum underestimates the
    true one, so True here never certifies the property, while False
    refutes it for this matrix.
    """
    return report.sup_dev <= delta


@dataclass(frozen=True)
class SweepPoint:
    """All trial reports at one measurement count."""

    m: int
    reports: tuple[DeviationReport, ...]

    @property
    def mean_sup_dev(self) -> float:
        return float(np.mean([r.sup_dev for r in self.reports]))

    @property
    def max_sup_dev(self) -> float:
        return float(np.max([r.sup_dev for r in self.reports]))

    @property
    def mean_mean_dev(self) -> float:
        return float(np.mean([r.mean_dev for r in self.reports]))


def _run_trials(
    task: Callable[[int, int], object],
    blocks: int,
    trials: int,
    threads: int,
) -> dict[tuple[int, int], object]:
    """Run task(block, trial) over the grid; scheduling never affects values."""
    keys = [(b, t) for b in range(blocks) for t in range(trials)]
    if threads <= 1:
        return {key: task(*key) for key in keys}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {key: pool.submit(task, *key) for key in keys}
        return {key: fut.result() for key, fut in futures.items()}


def sweep_m(
    n: int,
    s: int,
    sigma: float,
    m_grid: Sequence[int],
    trials: int,
    sampler: PairSampler,
    seed: int,
    metric: str | None = None,
    threads: int = 1,
    code_sink: Callable[[int, int, np.ndarray, int], None] | None = None,
) -> list[SweepPoint]:
    """Fresh matrix (and noise) per trial at every m; aggregate per m.

    Any (m, trial) cell uses its own streams derived from (seed, grid
    position), so results are independent of thread count, and per-trial
    reports are retained alongside the mean of sups.
    """
    if len(m_grid) == 0:
        raise ValueError("m_grid must be nonempty")
    if list(m_grid) != sorted(set(int(m) for m in m_grid)):
        raise ValueError("m_grid must be strictly ascending")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if sampler.n != n or sampler.s != s:
        raise ValueError("sampler (n, s) must match the sweep")
    noise = NoiseModel(sigma)

    def task(block: int, trial: int) -> DeviationReport:
        m = int(m_grid[block])
        A = SensingMatrix.gaussian(RngStream(seed, trial_stream_id(block, trial, trials, _ROLE_MATRIX)), m, n)
        eta = None
        if sigma > 0:
            eta = NoiseVector.gaussian(RngStream(seed, trial_stream_id(block, trial, trials, _ROLE_NOISE)), m, sigma)
        sink = None
        if code_sink is not None:
            sink = lambda codes, mm, _b=block, _t=trial: code_sink(_b, _t, codes, mm)
        pair_stream = RngStream(seed, trial_stream_id(block, trial, trials, _ROLE_PAIRS))
        return deviation(A, eta, sampler, noise, pair_stream, metric=metric, code_sink=sink)

    results = _run_trials(task, len(m_grid), trials, threads)
    return [
        SweepPoint(m=int(m), reports=tuple(results[(b, t)] for t in range(trials)))
        for b, m in enumerate(m_grid)
    ]


def scaling_fit(points: Sequence[SweepPoint]) -> SlopeFit:
    """Log-log slope of mean sup deviation against measurement count."""
    return fit_loglog_slope([(float(p.m), p.mean_sup_dev) for p in points])


@dataclass(frozen=True)
class FloorPoint:
    m: int
    geodesic: tuple[DeviationReport, ...]
    distorted: tuple[DeviationReport, ...]

    @property
    def mean_sup_geodesic(self) -> float:
        return float(np.mean([r.sup_dev for r in self.geodesic]))

    @property
    def mean_sup_distorted(self) -> float:
        return float(np.mean([r.sup_dev for r in self.distorted]))


@dataclass(frozen=True)
class FloorReport:
    """Contrast of noisy-embedding deviations against the two metrics.

    Against the distorted metric the deviation keeps shrinking with m;
    against the geodesic metric it cannot drop below the antipodal gap on
    near-antipodal pairs, and should settle onto it as m grows.
    """

    sigma: float
    floor: float
    slack: float
    distorted_tol: float
    points: tuple[FloorPoint, ...]

    @property
    def floor_respected(self) -> bool:
        return all(p.mean_sup_geodesic >= self.floor - self.slack for p in self.points)

    @property
    def floor_attained(self) -> bool:
        last = self.points[-1]
        return abs(last.mean_sup_geodesic - self.floor) <= self.slack

    @property
    def distorted_ok(self) -> bool:
        return self.points[-1].mean_sup_distorted <= self.distorted_tol

    @property
    def passed(self) -> bool:
        return self.floor_respected and self.floor_attained and self.distorted_ok


def geodesic_floor_check(
    n: int,
    s: int,
    sigma: float,
    m_grid: Sequence[int],
    trials: int,
    sampler: PairSampler,
    seed: int,
    slack: float = 0.02,
    distorted_tol: float = 0.05,
    threads: int = 1,
) -> FloorReport:
    """Measure noisy-embedding deviations against both sphere metrics.

    Requires sigma > 0 (at sigma = 0 the floor is zero and a plain sweep is
    the right tool) and a sampler that produces near-antipodal pairs, where
    the geodesic/distorted discrepancy is extremal.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive; the geodesic floor is zero without noise")
    if sampler.strategy not in ("near-antipodal", "mixed"):
        raise ValueError("sampler must include near-antipodal pairs")
    if len(m_grid) == 0:
        raise ValueError("m_grid must be nonempty")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if sampler.n != n or sampler.s != s:
        raise ValueError("sampler (n, s) must match the check")

    def task(block: int, trial: int) -> tuple[DeviationReport, DeviationReport]:
        m = int(m_grid[block])
        A = SensingMatrix.gaussian(RngStream(seed, trial_stream_id(block, trial, trials, _ROLE_MATRIX)), m, n)
        eta = NoiseVector.gaussian(RngStream(seed, trial_stream_id(block, trial, trials, _ROLE_NOISE)), m, sigma)
        pair_stream = RngStream(seed, trial_stream_id(block, trial, trials, _ROLE_PAIRS))
        batch = sampler.sample(pair_stream)
        codes = embed_batch(A, batch.signals, eta)
        counts = hamming_pair_counts(codes, batch.pairs[:, 0], batch.pairs[:, 1])
        rho = batch.correlations()
        geo = np.abs(counts / m - geodesic_from_inner(rho))
        dist = np.abs(counts / m - distorted_from_inner(rho, sigma))
        return (
            _report_from_devs(geo, m, sigma, "geodesic", pair_stream),
            _report_from_devs(dist, m, sigma, "distorted", pair_stream),
        )

    results = _run_trials(task, len(m_grid), trials, threads)
    points = []
    for b, m in enumerate(m_grid):
        geo = tuple(results[(b, t)][0] for t in range(trials))
        dist = tuple(results[(b, t)][1] for t in range(trials))
        points.append(FloorPoint(m=int(m), geodesic=geo, distorted=dist))
    return FloorReport(
        sigma=sigma,
        floor=antipodal_gap(NoiseModel(sigma)),
        slack=slack,
        distorted_tol=distorted_tol,
        points=tuple(points),
    )
