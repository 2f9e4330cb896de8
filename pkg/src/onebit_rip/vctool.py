"""Shattering of sparse hemispheres and wedges, by brute force and search.

A hemisphere with sparse pole p labels a point b positive when <p, b> > 0
and negative otherwise (ties are negative, matching the sign quantizer in
:mod:`onebit_rip.embedding`).  A dichotomy of a finite point set is
achievable when some pole supported on at most s coordinates reproduces it;
wedges achieve exactly the XOR combinations of hemisphere dichotomies.

Feasibility of one dichotomy on one support is decided by a margin-
maximizing linear program: maximize t subject to <p, b_i> >= t on positive
points, <p, b_j> <= 0 on negative points and |p|_inf <= 1, declared feasible
iff the optimum exceeds a small tolerance.  Random direction sampling runs
first as a cheap screen (anything it finds carries an explicit witness); the
LP settles whatever sampling leaves open.  Every witness handed out is
re-verified against the sign convention before anyone gets to see it.

Also here: the closed-form VC upper bound for sparse hemispheres, Sauer's
growth bound, the lower branch of the Lambert W function that the closed
form comes out of, and a greedy empirical packing count for wedge families.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import _kernels
from .embedding import pack_sign_bits
from .geometry import NORM_TOL, UnitVector
from .stochastics import RngStream, gaussian_vector

#: Shattering checks enumerate 2^k dichotomies; refuse beyond this.
MAX_ENUM_POINTS = 20
#: Exhaustive support enumeration is allowed up to this many supports.
SUPPORT_ENUM_LIMIT = 100_000
#: Margin threshold of the feasibility program.
DEFAULT_MARGIN_TOL = 1e-9

_SCREEN_SEED = 0x0B17B17  # fixed stream for the deterministic sampling screen
_SCREEN_DIRECTIONS = 128
_SEARCH_DIRECTIONS = 192
_LP_ASSIST_MAX = 16
_LP_SUPPORT_TRIES = 6
_RESTART_AFTER = 40


class EnumerationBudgetError(RuntimeError):
    """Raised when an exhaustive enumeration would exceed its guard."""


@dataclass(frozen=True)
class Dichotomy:
    """A labeling of k points; bit i of ``mask`` set means point i positive."""

    mask: int
    width: int

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError("width must be >= 1")
        if not 0 <= self.mask < (1 << self.width):
            raise ValueError(f"mask {self.mask} does not fit width {self.width}")

    @classmethod
    def from_labels(cls, labels) -> "Dichotomy":
        labels = list(labels)
        mask = 0
        for i, lab in enumerate(labels):
            if lab:
                mask |= 1 << i
        return cls(mask=mask, width=len(labels))

    @property
    def labels(self) -> tuple[bool, ...]:
        return tuple(bool((self.mask >> i) & 1) for i in range(self.width))


class PointSet:
    """k pairwise-distinct unit vectors in R^n, as rows."""

    __slots__ = ("_points",)

    def __init__(self, points: np.ndarray):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] < 1:
            raise ValueError("points must be a nonempty 2-d array")
        norms = np.linalg.norm(points, axis=1)
        if np.any(np.abs(norms - 1.0) > NORM_TOL):
            raise ValueError("all points must be unit vectors")
        for i in range(points.shape[0]):
            for j in range(i + 1, points.shape[0]):
                if np.array_equal(points[i], points[j]):
                    raise ValueError(f"points {i} and {j} coincide")
        points = points.copy()
        points.flags.writeable = False
        self._points = points

    @classmethod
    def from_vectors(cls, vectors) -> "PointSet":
        return cls(np.vstack([v.coords for v in vectors]))

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def k(self) -> int:
        return self._points.shape[0]

    @property
    def n(self) -> int:
        return self._points.shape[1]


@dataclass(frozen=True)
class ShatterResult:
    """Outcome of a shattering check.

    ``witnesses`` maps each achieved dichotomy to (support, pole) for
    hemispheres, or to a pair of such tuples for wedges.  ``exact`` is False
    when supports were sampled rather than enumerated, in which case the
    achieved set is only a lower bound and a negative ``shattered`` verdict
    is not certified.
    """

    shattered: bool
    achieved_count: int
    witnesses: dict | None
    exact: bool
    width: int

    def __post_init__(self) -> None:
        if self.shattered != (self.achieved_count == (1 << self.width)):
            raise ValueError("shattered flag inconsistent with achieved count")


@dataclass(frozen=True)
class SearchResult:
    """Largest witness-certified shattered set a randomized search found."""

    point_set: PointSet | None
    result: ShatterResult | None
    size: int


# ---------------------------------------------------------------------------
# feasibility of a single dichotomy on a single support
# ---------------------------------------------------------------------------

def _matches(points: np.ndarray, p_full: np.ndarray, mask: int) -> bool:
    """Does the pole reproduce the dichotomy under the (> 0 / <= 0) rule?"""
    dots = points @ p_full
    for i in range(points.shape[0]):
        positive = bool((mask >> i) & 1)
        if positive != (dots[i] > 0.0):
            return False
    return True


def _cleanup(p: np.ndarray) -> np.ndarray:
    out = p.copy()
    top = np.max(np.abs(out))
    if top > 0:
        out[np.abs(out) < 1e-12 * top] = 0.0
    return out


def _repair_witness(points: np.ndarray, support: np.ndarray, p_full: np.ndarray, mask: int) -> np.ndarray | None:
    """Nudge an LP solution onto the exact sign pattern.

    Solver output can leave negative-labeled points with dot products a hair
    above zero when the true witness lies on their boundary; projecting the
    pole onto the nullspace of those rows restores the pattern without
    touching the (strictly positive) margins that matter.
    """
    p_full = _cleanup(p_full)
    if _matches(points, p_full, mask):
        return p_full
    dots = points @ p_full
    scale = max(1.0, float(np.max(np.abs(dots))))
    offenders = [
        i
        for i in range(points.shape[0])
        if not ((mask >> i) & 1) and 0.0 < dots[i] <= 1e-6 * scale
    ]
    if offenders:
        B = points[np.ix_(offenders, support)]
        sub = p_full[support]
        correction = np.linalg.pinv(B) @ (B @ sub)
        repaired = np.zeros_like(p_full)
        repaired[support] = sub - correction
        repaired = _cleanup(repaired)
        if np.max(np.abs(repaired)) > 1e-9 and _matches(points, repaired, mask):
            return repaired
    return None


def _feasible_on_support(
    points: np.ndarray,
    mask: int,
    support: np.ndarray,
    tol: float,
) -> np.ndarray | None:
    """Margin LP on one support; returns a verified pole or None."""
    k = points.shape[0]
    sub = points[:, support]
    sdim = support.size
    pos = [i for i in range(k) if (mask >> i) & 1]
    neg = [i for i in range(k) if not (mask >> i) & 1]

    if pos:
        # maximize t  s.t.  <p, b_i> >= t (positives), <p, b_j> <= 0 (negatives)
        c = np.zeros(sdim + 1)
        c[-1] = -1.0
        rows = []
        for i in pos:
            rows.append(np.concatenate([-sub[i], [1.0]]))
        for j in neg:
            rows.append(np.concatenate([sub[j], [0.0]]))
        A_ub = np.vstack(rows)
        b_ub = np.zeros(A_ub.shape[0])
        bounds = [(-1.0, 1.0)] * sdim + [(0.0, None)]
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if res.status != 0 or -res.fun <= tol:
            return None
        p_full = np.zeros(points.shape[1])
        p_full[support] = res.x[:sdim]
    else:
        # all-negative dichotomy: the margin objective degenerates, so pin one
        # coordinate to +-1 and ask for plain feasibility of <p, b_j> <= 0.
        p_full = None
        for c_idx in range(sdim):
            for sign in (1.0, -1.0):
                bounds = [(-1.0, 1.0)] * sdim
                bounds[c_idx] = (sign, sign)
                res = linprog(
                    np.zeros(sdim), A_ub=sub, b_ub=np.zeros(k), bounds=bounds, method="highs"
                )
                if res.status == 0:
                    p_full = np.zeros(points.shape[1])
                    p_full[support] = res.x
                    break
            if p_full is not None:
                break
        if p_full is None:
            return None

    return _repair_witness(points, support, p_full, mask)


def achievable(points: PointSet, dich: Dichotomy, support, tol: float = DEFAULT_MARGIN_TOL) -> np.ndarray | None:
    """A pole on ``support`` realizing the dichotomy, or None if infeasible.

    Any returned pole reproduces the dichotomy exactly under the sign rule
    (> 0 positive, <= 0 negative); infeasibility means the margin program
    found no direction with margin above ``tol``.
    """
    if dich.width != points.k:
        raise ValueError(f"dichotomy width {dich.width} does not match point count {points.k}")
    support = np.asarray(sorted(int(i) for i in support), dtype=np.int64)
    if support.size == 0:
        raise ValueError("support must be nonempty")
    if support.size != np.unique(support).size:
        raise ValueError("support indices must be distinct")
    if support.min() < 0 or support.max() >= points.n:
        raise ValueError("support indices out of range")
    if not tol > 0:
        raise ValueError("tol must be positive")
    return _feasible_on_support(points.points, dich.mask, support, tol)


# ---------------------------------------------------------------------------
# dichotomy enumeration
# ---------------------------------------------------------------------------

def _screen_generator() -> np.random.Generator:
    key = np.array([_SCREEN_SEED, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _masks_from_dots(dots: np.ndarray) -> np.ndarray:
    """Column sign patterns as integer masks; dots is (k, D)."""
    bits = (dots > 0.0).astype(np.int64)
    weights = (1 << np.arange(dots.shape[0], dtype=np.int64))
    return bits.T @ weights


def _iter_supports(n: int, s: int, support_budget: int | None):
    """All size-s supports, or a deterministic random sample of them.

    Poles on smaller supports are poles on larger ones with zeros, so
    enumerating exactly size-s supports loses nothing.
    """
    total = math.comb(n, s)
    if total <= SUPPORT_ENUM_LIMIT:
        return [np.asarray(c, dtype=np.int64) for c in itertools.combinations(range(n), s)], True
    if support_budget is None:
        raise EnumerationBudgetError(
            f"{total} supports exceed the enumeration limit {SUPPORT_ENUM_LIMIT}; "
            "pass support_budget to sample supports (results become lower bounds)"
        )
    gen = _screen_generator()
    picks = {tuple(sorted(gen.choice(n, size=s, replace=False).tolist())) for _ in range(support_budget)}
    return [np.asarray(p, dtype=np.int64) for p in sorted(picks)], False


def _enumerate_hemispheres(
    points: PointSet, s: int, support_budget: int | None
) -> tuple[dict[int, tuple[tuple[int, ...], np.ndarray]], bool]:
    """Map of achievable hemisphere masks to witnesses, plus exactness flag."""
    k, n = points.k, points.n
    if k > MAX_ENUM_POINTS:
        raise EnumerationBudgetError(f"{k} points exceed the {MAX_ENUM_POINTS}-point enumeration guard")
    if not 1 <= s <= n:
        raise ValueError(f"sparsity must satisfy 1 <= s <= n, got s={s}, n={n}")
    supports, exact = _iter_supports(n, s, support_budget)
    pts = points.points
    found: dict[int, tuple[tuple[int, ...], np.ndarray]] = {}
    gen = _screen_generator()

    # cheap screen: random poles per support, witnesses for free
    for support in supports:
        dirs = gen.standard_normal((support.size, _SCREEN_DIRECTIONS))
        masks = _masks_from_dots(pts[:, support] @ dirs)
        for col, mask in enumerate(masks):
            mask = int(mask)
            if mask not in found:
                p_full = np.zeros(n)
                p_full[support] = dirs[:, col]
                if _matches(pts, p_full, mask):
                    found[mask] = (tuple(support.tolist()), p_full)

    # the LP settles every mask the screen did not find
    for mask in range(1 << k):
        if mask in found:
            continue
        for support in supports:
            p_full = _feasible_on_support(pts, mask, support, DEFAULT_MARGIN_TOL)
            if p_full is not None:
                found[mask] = (tuple(support.tolist()), p_full)
                break
    return found, exact


def hemisphere_dichotomies(points: PointSet, s: int, support_budget: int | None = None) -> frozenset[Dichotomy]:
    """All dichotomies realizable by hemispheres with s-sparse poles.

    Exact when every size-s support fits under the enumeration limit;
    otherwise supports are sampled (``support_budget`` required) and the
    result is a lower bound.
    """
    found, _ = _enumerate_hemispheres(points, s, support_budget)
    return frozenset(Dichotomy(mask=m, width=points.k) for m in found)


def _xor_closure(masks: list[int], width: int) -> np.ndarray:
    """Bitmap of pairwise-XOR masks (symmetric differences of hemispheres)."""
    seen = np.zeros(1 << width, dtype=bool)
    arr = np.asarray(masks, dtype=np.int64)
    for a in masks:
        seen[np.bitwise_xor(arr, a)] = True
    return seen


def wedge_dichotomies(points: PointSet, s: int, support_budget: int | None = None) -> frozenset[Dichotomy]:
    """Dichotomies realizable by wedges: XORs of hemisphere dichotomies.

    A point falls in the wedge of (x, y) exactly when the two hemispheres
    disagree on it, so the wedge pattern is the XOR of the two hemisphere
    patterns.  Always contains the all-negative pattern (XOR of anything
    with itself).
    """
    found, _ = _enumerate_hemispheres(points, s, support_budget)
    seen = _xor_closure(list(found), points.k)
    return frozenset(Dichotomy(mask=int(m), width=points.k) for m in np.flatnonzero(seen))


def is_shattered(points: PointSet, s: int, cls: str = "hemisphere", support_budget: int | None = None) -> ShatterResult:
    """Check whether the class achieves all 2^k dichotomies of the points."""
    if cls not in ("hemisphere", "wedge"):
        raise ValueError(f"cls must be 'hemisphere' or 'wedge', got {cls!r}")
    found, exact = _enumerate_hemispheres(points, s, support_budget)
    k = points.k
    if cls == "hemisphere":
        witnesses = {Dichotomy(mask=m, width=k): w for m, w in found.items()}
    else:
        masks = list(found)
        witnesses = {}
        seen = _xor_closure(masks, k)
        # record one witness pair per achieved XOR pattern
        for a, b in itertools.combinations_with_replacement(masks, 2):
            m = a ^ b
            key = Dichotomy(mask=m, width=k)
            if key not in witnesses:
                witnesses[key] = (found[a], found[b])
        assert len(witnesses) == int(seen.sum())
    achieved = len(witnesses)
    return ShatterResult(
        shattered=achieved == (1 << k),
        achieved_count=achieved,
        witnesses=witnesses,
        exact=exact,
        width=k,
    )


# ---------------------------------------------------------------------------
# randomized lower-bound search
# ---------------------------------------------------------------------------

class _Budget:
    """Work-unit meter: insertion attempts and LP solves each cost one unit."""

    def __init__(self, units: int):
        self.remaining = int(units)

    def spend(self, units: int = 1) -> bool:
        if self.remaining < units:
            return False
        self.remaining -= units
        return True


def _sample_sparse_direction_block(stream: RngStream, n: int, s: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """``count`` random s-sparse directions as an (n, count) matrix + supports."""
    gen = stream.generator
    supports = np.argpartition(gen.random((count, n)), s - 1, axis=1)[:, :s] if s < n else np.tile(
        np.arange(n), (count, 1)
    )
    coeffs = gaussian_vector(stream, count * s).reshape(count, s)
    dirs = np.zeros((count, n))
    np.put_along_axis(dirs, supports, coeffs, axis=1)
    return dirs.T, supports


def _heuristic_supports(points: np.ndarray, mask: int, s: int, gen: np.random.Generator) -> list[np.ndarray]:
    """Candidate supports for one dichotomy, best guesses first.

    The signed sum of points (positives minus negatives) is the natural
    separating direction; its largest coordinates make the first support.
    """
    k, n = points.shape
    if s >= n:
        return [np.arange(n, dtype=np.int64)]
    signs = np.array([1.0 if (mask >> i) & 1 else -1.0 for i in range(k)])
    v = signs @ points
    ranked = np.argsort(-np.abs(v), kind="stable")
    cands = [np.sort(ranked[:s]).astype(np.int64)]
    for _ in range(_LP_SUPPORT_TRIES - 1):
        cands.append(np.sort(gen.choice(n, size=s, replace=False)).astype(np.int64))
    return cands


class _SearchState:
    """A shattered point set plus one verified witness per hemisphere mask.

    Witnesses are kept in parallel arrays so that extending them to a new
    candidate point is a single matrix product.
    """

    __slots__ = ("pts", "masks", "poles", "supports")

    def __init__(self, pts, masks, poles, supports):
        self.pts = pts
        self.masks = masks
        self.poles = poles
        self.supports = supports

    @classmethod
    def empty(cls, n: int) -> "_SearchState":
        return cls(np.empty((0, n)), np.empty(0, dtype=np.int64), np.empty((0, n)), [])

    @property
    def k(self) -> int:
        return self.pts.shape[0]

    def as_witness_dict(self) -> dict[int, tuple[tuple[int, ...], np.ndarray]]:
        return {
            int(m): (self.supports[i], self.poles[i])
            for i, m in enumerate(self.masks)
        }


def _try_insert(
    state: _SearchState,
    q: np.ndarray,
    n: int,
    s: int,
    cls: str,
    stream: RngStream,
    budget: _Budget,
) -> "_SearchState | None":
    """Extended state if state.pts + q is still shattered by the class.

    Hemisphere shattering needs every mask witnessed; wedge shattering only
    needs the XOR closure of the witnessed hemisphere masks to cover the
    cube.  Failed attempts never touch python-level per-mask loops: carried
    witnesses extend by one matrix product and screening is vectorized.
    """
    k = state.k
    new_pts = np.vstack([state.pts, q[np.newaxis, :]])
    needed = 1 << (k + 1)
    seen = np.zeros(needed, dtype=bool)

    if state.masks.size:
        labels = (state.poles @ q > 0.0).astype(np.int64)
        ext_masks = state.masks | (labels << k)
        seen[ext_masks] = True
    else:
        ext_masks = state.masks

    rounds = []
    for _ in range(2):
        if cls == "hemisphere" and seen.all():
            break
        dirs, sups = _sample_sparse_direction_block(stream, n, s, _SEARCH_DIRECTIONS)
        masks = _masks_from_dots(new_pts @ dirs)
        rounds.append((dirs, sups, masks))
        seen[masks] = True

    lp_found: dict[int, tuple[tuple[int, ...], np.ndarray]] = {}
    missing = np.flatnonzero(~seen)
    if missing.size:
        if cls == "hemisphere" and missing.size > _LP_ASSIST_MAX:
            return None
        if missing.size <= _LP_ASSIST_MAX:
            gen = stream.generator
            for mask in missing:
                hit = None
                for support in _heuristic_supports(new_pts, int(mask), s, gen):
                    if not budget.spend():
                        hit = None
                        break
                    hit = _feasible_on_support(new_pts, int(mask), support, DEFAULT_MARGIN_TOL)
                    if hit is not None:
                        lp_found[int(mask)] = (tuple(support.tolist()), hit)
                        seen[mask] = True
                        break
                if hit is None and cls == "hemisphere":
                    return None
        if cls == "hemisphere" and not seen.all():
            return None
    if cls == "wedge" and not _xor_closure(np.flatnonzero(seen).tolist(), k + 1).all():
        return None

    # success: gather one witness per seen mask (reuse first, then screen, then LP)
    wit: dict[int, tuple[tuple[int, ...], np.ndarray]] = {}
    for i, m in enumerate(ext_masks):
        wit.setdefault(int(m), (state.supports[i], state.poles[i]))
    for dirs, sups, masks in rounds:
        for col, m in enumerate(masks):
            mi = int(m)
            if mi not in wit:
                wit[mi] = (tuple(sups[col].tolist()), dirs[:, col].copy())
    wit.update(lp_found)
    order = np.array(sorted(wit), dtype=np.int64)
    return _SearchState(
        pts=new_pts,
        masks=order,
        poles=np.vstack([wit[int(m)][1] for m in order]),
        supports=[wit[int(m)][0] for m in order],
    )


def vc_lower_bound_search(n: int, s: int, cls: str, budget: int, stream: RngStream) -> SearchResult:
    """Randomized restarts + greedy insertion toward large shattered sets.

    ``budget`` counts work units (one per insertion attempt, one per LP
    solve); exhausting it returns the best set so far.  The returned size is
    a certified lower bound on the VC dimension of the class: every
    dichotomy of the returned set carries a verified witness (a pole for
    hemispheres, a pole pair for wedges).
    """
    if cls not in ("hemisphere", "wedge"):
        raise ValueError(f"cls must be 'hemisphere' or 'wedge', got {cls!r}")
    if not 1 <= s <= n:
        raise ValueError(f"sparsity must satisfy 1 <= s <= n, got s={s}, n={n}")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    meter = _Budget(budget)

    best: _SearchState | None = None
    cur = _SearchState.empty(n)
    fails = 0

    while meter.spend():
        if cur.k >= MAX_ENUM_POINTS:
            if best is None or cur.k > best.k:
                best = cur
            cur, fails = _SearchState.empty(n), 0
            continue
        # candidate points range over the whole sphere; only poles are sparse
        q = gaussian_vector(stream, n)
        norm = float(np.linalg.norm(q))
        if norm == 0.0:
            continue
        q = q / norm
        if cur.k and bool((cur.pts == q).all(axis=1).any()):
            continue
        extended = _try_insert(cur, q, n, s, cls, stream, meter)
        if extended is not None:
            cur = extended
            fails = 0
            if best is None or cur.k > best.k:
                best = cur
        else:
            fails += 1
            if fails >= _RESTART_AFTER:
                cur, fails = _SearchState.empty(n), 0

    if best is None or best.k == 0:
        return SearchResult(point_set=None, result=None, size=0)

    k = best.k
    best_wit = best.as_witness_dict()
    if cls == "hemisphere":
        witnesses = {Dichotomy(mask=m, width=k): w for m, w in best_wit.items()}
    else:
        hem_masks = list(best_wit)
        witnesses = {}
        for a, b in itertools.combinations_with_replacement(hem_masks, 2):
            key = Dichotomy(mask=a ^ b, width=k)
            if key not in witnesses:
                witnesses[key] = (best_wit[a], best_wit[b])
        assert len(witnesses) == 1 << k
    result = ShatterResult(
        shattered=True,
        achieved_count=1 << k,
        witnesses=witnesses,
        exact=True,
        width=k,
    )
    return SearchResult(point_set=PointSet(best.pts), result=result, size=k)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def vc_upper_bound(n: int, s: int) -> float:
    """(2 / ln 2) * s * ln(n e^2 / (s ln 2)), an explicit VC ceiling."""
    if not 1 <= s <= n:
        raise ValueError(f"need 1 <= s <= n, got s={s}, n={n}")
    ln2 = math.log(2.0)
    return (2.0 / ln2) * s * math.log(n * math.e**2 / (s * ln2))


def sauer_bound(k: int, d: int) -> float:
    """(e k / d)^d, the growth-function bound for VC dimension d at k points."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if k < d:
        raise ValueError("need k >= d")
    return (math.e * k / d) ** d


def lambert_w_minus1(x):
    """Lower branch of Lambert W: the w <= -1 solving w e^w = x.

    Defined for x in [-1/e, 0); the branch point maps to -1.  Bracketed
    bisection (the branch is monotone) down to width 1e-10, then Newton
    polish; the result satisfies |w e^w - x| <= 1e-12 |x|.  Accepts a scalar
    or an array.
    """
    scalar = np.isscalar(x)
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    branch = -1.0 / math.e
    if np.any(arr < branch) or np.any(arr >= 0.0):
        raise ValueError(f"arguments must lie in [-1/e, 0), got {x}")

    lo = np.full_like(arr, -2.0)
    for _ in range(120):
        need = lo * np.exp(lo) < arr  # f(lo) still below x: widen bracket
        if not np.any(need):
            break
        lo[need] *= 2.0
    hi = np.full_like(arr, -1.0)

    for _ in range(300):
        if np.all(hi - lo <= 1e-10):
            break
        mid = 0.5 * (lo + hi)
        fmid_ge = mid * np.exp(mid) >= arr  # f decreasing: solution lies right of mid
        lo = np.where(fmid_ge, mid, lo)
        hi = np.where(fmid_ge, hi, mid)

    w = 0.5 * (lo + hi)
    for _ in range(4):
        ew = np.exp(w)
        denom = (1.0 + w) * ew
        safe = np.abs(denom) > 1e-300
        step = np.zeros_like(w)
        np.divide(w * ew - arr, denom, out=step, where=safe)
        cand = w - step
        ok = np.isfinite(cand) & (cand <= -1.0 + 1e-12)
        w = np.where(ok, cand, w)

    w = np.minimum(w, -1.0)
    # the branch point itself has the exact solution -1
    w = np.where(arr <= branch + 1e-15, -1.0, w)
    residual = np.abs(w * np.exp(w) - arr)
    if np.any(residual > 1e-12 * np.abs(arr)):
        worst = float(np.max(residual / np.abs(arr)))
        raise ArithmeticError(f"Lambert W residual {worst:.3e} exceeds 1e-12 relative tolerance")
    return float(w[0]) if scalar else w


# ---------------------------------------------------------------------------
# empirical packing of wedges
# ---------------------------------------------------------------------------

def packing_estimate(
    n: int,
    s: int,
    sigma: float,
    t: float,
    candidates: int,
    empirical_points: int,
    stream: RngStream,
) -> int:
    """Greedy count of wedges pairwise t^2-separated in empirical measure.

    Wedges come from random s-sparse pairs (noise-lifted one dimension up
    when sigma > 0); the measure is a fixed Gaussian cloud of
    ``empirical_points`` draws.  A candidate is kept when its symmetric
    difference with every kept wedge has empirical measure above t^2.  The
    count is a lower bound on the packing number under that measure.
    """
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    if candidates < 1 or empirical_points < 1:
        raise ValueError("candidates and empirical_points must be >= 1")
    if not 1 <= s <= n:
        raise ValueError(f"sparsity must satisfy 1 <= s <= n, got s={s}, n={n}")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")

    dim = n + 1 if sigma > 0 else n
    lift_scale = 1.0 / math.sqrt(1.0 + sigma * sigma)
    cloud = gaussian_vector(stream, empirical_points * dim).reshape(empirical_points, dim)

    gen = stream.generator
    threshold = t * t * empirical_points
    kept: list[np.ndarray] = []
    kept_rows: np.ndarray | None = None

    chunk = 256
    done = 0
    while done < candidates:
        take = min(chunk, candidates - done)
        signals = np.zeros((2 * take, dim))
        for i in range(2 * take):
            sup = gen.choice(n, size=s, replace=False)
            coeffs = gaussian_vector(stream, s)
            norm = float(np.linalg.norm(coeffs))
            if norm == 0.0:
                coeffs, norm = np.ones(s), math.sqrt(s)
            signals[i, sup] = coeffs / norm * lift_scale if sigma > 0 else coeffs / norm
            if sigma > 0:
                signals[i, n] = sigma * lift_scale
        bits = cloud @ signals.T > 0.0
        wedge_bits = bits[:, 0::2] != bits[:, 1::2]
        words = pack_sign_bits(wedge_bits.T)
        for row in words:
            if kept_rows is None:
                kept.append(row)
                kept_rows = np.vstack(kept)
                continue
            counts = _kernels.hamming_one_vs_many(
                kept_rows, np.arange(kept_rows.shape[0], dtype=np.int64), row
            )
            if np.min(counts) > threshold:
                kept.append(row)
                kept_rows = np.vstack(kept)
        done += take
    return len(kept)
