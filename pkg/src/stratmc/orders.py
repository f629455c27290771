"""Exact decision procedures for stochastic, convex and majorization orders.

Univariate laws here have finite rational support, so every relation can be
settled by comparing piecewise-linear or step functions at finitely many
points: CDFs for the stochastic order, stop-loss transforms
t -> E[(X - t)_+] for the (increasing) convex order.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .discrete import DiscreteDist
from .errors import PreconditionError, StratError
from .exact_dist import CensoredSupCdf, poisson_binomial
from .measure_space import as_fraction, fraction_str


@dataclass(frozen=True, eq=False)
class OrderVerdict:
    """Outcome of an order test; truthy iff the relation holds.

    Compares equal to ``True``/``False`` so it can stand in for a plain bool.
    """

    relation: str
    result: bool
    witness: object = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.result

    def __eq__(self, other) -> bool:
        if isinstance(other, bool):
            return self.result is other
        if isinstance(other, OrderVerdict):
            return (self.relation, self.result, self.witness) == (
                other.relation, other.result, other.witness)
        return NotImplemented

    __hash__ = None

    def report(self, *inputs) -> dict:
        w = self.witness
        if isinstance(w, Fraction):
            w = fraction_str(w)
        digest = hashlib.sha256(repr(inputs).encode()).hexdigest()[:16]
        return {
            "relation": self.relation,
            "result": self.result,
            "witness_point": w,
            "inputs_digest": digest,
        }


def _vector(x) -> list[Fraction]:
    return [as_fraction(v) for v in getattr(x, "entries", x)]


@dataclass(frozen=True)
class MajorizationVector:
    entries: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(as_fraction(v) for v in self.entries))
        if not self.entries:
            raise StratError("vector must be non-empty")

    @classmethod
    def expanded(cls, values: Sequence, counts: Sequence[int]) -> MajorizationVector:
        """Repeat ``values[i]`` ``counts[i]`` times."""
        return cls(tuple(v for v, k in zip(values, counts) for _ in range(k)))


def majorizes(x, y) -> bool:
    """True iff y is majorized by x."""
    xs, ys = _vector(x), _vector(y)
    if len(xs) != len(ys):
        raise StratError("majorization needs vectors of equal length")
    if sum(xs) != sum(ys):
        return False
    xs.sort(reverse=True)
    ys.sort(reverse=True)
    sx = sy = Fraction(0)
    for a, b in zip(xs[:-1], ys[:-1]):
        sx += a
        sy += b
        if sy > sx:
            return False
    return True


def block_average(x, groups: Sequence[Sequence[int]]) -> list[Fraction]:
    """Apply the block doubly stochastic matrix that averages within each group."""
    xs = _vector(x)
    out = list(xs)
    for g in groups:
        avg = sum((xs[i] for i in g), Fraction(0)) / len(g)
        for i in g:
            out[i] = avg
    return out


def _points(*dists: DiscreteDist) -> list[Fraction]:
    return sorted(set().union(*(d.support for d in dists)))


def _cdf_at(dist: DiscreteDist, points: Sequence[Fraction]) -> list[Fraction]:
    """CDF at ascending ``points`` in one sweep."""
    out, acc, i = [], Fraction(0), 0
    sup, pr = dist.support, dist.probs
    for t in points:
        while i < len(sup) and sup[i] <= t:
            acc += pr[i]
            i += 1
        out.append(acc)
    return out


def _stop_loss_at(dist: DiscreteDist, points: Sequence[Fraction]) -> list[Fraction]:
    """E[(X - t)_+] at ascending ``points`` in one sweep."""
    tail0 = sum(dist.probs, Fraction(0))
    tail1 = dist.mean
    out, i = [], 0
    sup, pr = dist.support, dist.probs
    for t in points:
        while i < len(sup) and sup[i] <= t:
            tail0 -= pr[i]
            tail1 -= pr[i] * sup[i]
            i += 1
        out.append(tail1 - t * tail0)
    return out


def dominates_st(lo: DiscreteDist, hi: DiscreteDist) -> OrderVerdict:
    """lo <=_st hi, i.e. P(lo <= t) >= P(hi <= t) for every t."""
    pts = _points(lo, hi)
    for t, a, b in zip(pts, _cdf_at(lo, pts), _cdf_at(hi, pts)):
        if a < b:
            return OrderVerdict("st", False, t)
    return OrderVerdict("st", True)


def dominates_st_cdf(lo: CensoredSupCdf, hi: CensoredSupCdf, grid_per_segment: int = 64) -> OrderVerdict:
    """CDF comparison on breakpoints plus ``grid_per_segment`` interior points per segment.

    A falsification net, not a decision procedure: passing means no violation
    was found on the grid.
    """
    if lo.breakpoints != hi.breakpoints:
        raise PreconditionError("both CDFs must share the same breakpoints")
    for t in lo.evaluation_grid(grid_per_segment):
        if lo.cdf(t) < hi.cdf(t):
            return OrderVerdict("st", False, t)
    return OrderVerdict("st", True)


def _stop_loss_verdict(relation: str, lo: DiscreteDist, hi: DiscreteDist) -> OrderVerdict:
    pts = _points(lo, hi)
    for t, a, b in zip(pts, _stop_loss_at(lo, pts), _stop_loss_at(hi, pts)):
        if a > b:
            return OrderVerdict(relation, False, t, "stop-loss")
    return OrderVerdict(relation, True)


def dominates_cx(lo: DiscreteDist, hi: DiscreteDist) -> OrderVerdict:
    """lo <=_cx hi: equal means and pointwise stop-loss dominance."""
    if lo.mean != hi.mean:
        return OrderVerdict("cx", False, None, "mean")
    return _stop_loss_verdict("cx", lo, hi)


def dominates_icx(lo: DiscreteDist, hi: DiscreteDist) -> OrderVerdict:
    """lo <=_icx hi: pointwise stop-loss dominance.

    Checking the union of supports suffices: both transforms are linear with
    slope -1 below the smallest support point and vanish above the largest.
    """
    return _stop_loss_verdict("icx", lo, hi)


@dataclass(frozen=True)
class GridDensity:
    """Non-negative rational weights on a finite d-dimensional grid."""

    values: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        arr = np.vectorize(as_fraction, otypes=[object])(np.asarray(self.values, dtype=object))
        if any(v < 0 for v in arr.flat):
            raise StratError("density weights must be non-negative")
        total = sum(arr.flat, Fraction(0))
        if total == 0:
            raise StratError("density has no mass")
        if self.normalized and total != 1:
            arr = arr / total
        object.__setattr__(self, "values", arr)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def cells(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(s) for s in self.shape)))


def is_mtp2(g: GridDensity) -> bool:
    """Exhaustive check of g(s)g(t) <= g(s v t) g(s ^ t) and lattice support."""
    if g.values.ndim > 3 or max(g.shape) > 16:
        raise StratError("is_mtp2 handles at most 3 axes of side 16")
    v = g.values
    cells = g.cells()
    for s, t in itertools.combinations(cells, 2):
        join = tuple(max(a, b) for a, b in zip(s, t))
        meet = tuple(min(a, b) for a, b in zip(s, t))
        if join in (s, t):
            continue
        if v[s] * v[t] > v[join] * v[meet]:
            return False
        if v[s] > 0 and v[t] > 0 and (v[join] == 0 or v[meet] == 0):
            return False
    return True


def _upsets(cells: list[tuple[int, ...]]) -> list[int]:
    """For each cell, the bitmask of cells componentwise >= it."""
    masks = []
    for c in cells:
        m = 0
        for j, e in enumerate(cells):
            if all(a >= b for a, b in zip(e, c)):
                m |= 1 << j
        masks.append(m)
    return masks


def increasing_sets(shape: tuple[int, ...]) -> list[int]:
    """All increasing subsets of the grid, as bitmasks over ``itertools.product`` order."""
    cells = list(itertools.product(*(range(s) for s in shape)))
    ups = _upsets(cells)
    out = []
    for mask in range(1 << len(cells)):
        if all(ups[j] & mask == ups[j] for j in range(len(cells)) if mask >> j & 1):
            out.append(mask)
    return out


def conditional_split_st(g: GridDensity, G) -> OrderVerdict:
    """Whether L(U | U in G^c) <=_st L(U | U in G), by enumerating increasing sets."""
    cells = g.cells()
    if len(cells) > 12:
        raise StratError("conditional_split_st handles grids of at most 12 cells")
    G = np.asarray(G, dtype=bool)
    if G.shape != g.shape:
        raise StratError("G must be a mask over the grid")
    gmask = sum(1 << j for j, c in enumerate(cells) if G[c])
    ups = _upsets(cells)
    if any(ups[j] & gmask != ups[j] for j in range(len(cells)) if gmask >> j & 1):
        raise StratError("G is not an increasing set")
    w = [g.values[c] for c in cells]

    def mass(mask: int) -> Fraction:
        return sum((w[j] for j in range(len(cells)) if mask >> j & 1), Fraction(0))

    full = (1 << len(cells)) - 1
    pG, pGc = mass(gmask), mass(full & ~gmask)
    if pG == 0 or pGc == 0:
        raise StratError("G and its complement must both carry mass")
    for A in increasing_sets(g.shape):
        if mass(A & gmask) / pG < mass(A & ~gmask) / pGc:
            witness = tuple(c for j, c in enumerate(cells) if A >> j & 1)
            return OrderVerdict("st", False, witness)
    return OrderVerdict("st", True)


def karlin_novikoff_check(p, q, n: int | None = None) -> OrderVerdict:
    """For p majorized by q, check mean of Bernoulli(q) <=_cx mean of Bernoulli(p)."""
    ps, qs = _vector(p), _vector(q)
    n = len(ps) if n is None else n
    if len(ps) != n or len(qs) != n:
        raise PreconditionError("p and q must both have length n")
    if any(not 0 <= v <= 1 for v in ps + qs):
        raise PreconditionError("Bernoulli parameters must lie in [0,1]")
    if not majorizes(qs, ps):
        raise PreconditionError("p is not majorized by q")
    x_p = poisson_binomial(ps).scale(Fraction(1, n))
    x_q = poisson_binomial(qs).scale(Fraction(1, n))
    return dominates_cx(x_q, x_p)


def mixture_max_check(
    block_laws: Sequence[tuple[DiscreteDist, int]], coarse_blocks: Sequence[Sequence[int]]
) -> OrderVerdict:
    """Maximum over size-weighted mixtures of grouped blocks is st-below the blockwise maximum.

    ``block_laws[i]`` is (law, size) for fine block i; ``coarse_blocks``
    groups fine block indices. The verdict compares
    prod_C F_C(t)^|C| >= prod_B F_B(t)^|B| at every support point.
    """
    flat = sorted(i for g in coarse_blocks for i in g)
    if flat != list(range(len(block_laws))) or any(len(g) == 0 for g in coarse_blocks):
        raise StratError("grouping must cover every block index exactly once")
    if any(size < 1 for _, size in block_laws):
        raise StratError("block sizes must be positive")
    coarse = []
    for g in coarse_blocks:
        total = sum(block_laws[i][1] for i in g)
        law = DiscreteDist.mixture([(Fraction(block_laws[i][1], total), block_laws[i][0]) for i in g])
        coarse.append((law, total))
    pts = _points(*(law for law, _ in block_laws))
    fine_cdfs = [_cdf_at(law, pts) for law, _ in block_laws]
    coarse_cdfs = [_cdf_at(law, pts) for law, _ in coarse]
    for k, t in enumerate(pts):
        fine = math.prod((c[k] ** size for c, (_, size) in zip(fine_cdfs, block_laws)), start=Fraction(1))
        crs = math.prod((c[k] ** size for c, (_, size) in zip(coarse_cdfs, coarse)), start=Fraction(1))
        if crs < fine:
            return OrderVerdict("st", False, t)
    return OrderVerdict("st", True)


class DKWResult(NamedTuple):
    discrepancy: float
    passed: bool


def dkw_band(R: int, alpha: float) -> float:
    return math.sqrt(math.log(2 / alpha) / (2 * R))


def _exact_evaluators(exact) -> tuple[Callable, Callable, list[float]]:
    if isinstance(exact, DiscreteDist):
        sup = np.array([float(v) for v in exact.support])
        cum = np.array([float(c) for _, c in exact.cdf_table()])

        def right(x):
            i = np.searchsorted(sup, x, side="right")
            return 0.0 if i == 0 else cum[i - 1]

        def left(x):
            i = np.searchsorted(sup, x, side="left")
            return 0.0 if i == 0 else cum[i - 1]

        return right, left, list(sup)
    right = lambda x: float(exact(Fraction(x)))  # noqa: E731
    if hasattr(exact, "cdf_left"):
        left = lambda x: float(exact.cdf_left(Fraction(x)))  # noqa: E731
    else:
        left = right
    jumps = [float(b) for b in getattr(exact, "breakpoints", ())]
    return right, left, jumps


def dkw_validate(rep, exact_cdf, alpha: float = 0.01) -> DKWResult:
    """Sup distance between the empirical CDF of ``rep`` and ``exact_cdf``.

    ``exact_cdf`` may be a DiscreteDist, a CensoredSupCdf, or any callable
    CDF (assumed continuous). Passes iff the distance is within the DKW band
    sqrt(ln(2/alpha) / (2R)).
    """
    R = rep.R
    if R < 30:
        raise PreconditionError("DKW validation needs at least 30 replicates")
    right, left, jumps = _exact_evaluators(exact_cdf)
    pts = np.union1d(np.unique(rep.values), np.array(jumps, dtype=float))
    emp_r = rep.ecdf(pts)
    emp_l = rep.ecdf_left(pts)
    worst = 0.0
    for x, er, el in zip(pts, emp_r, emp_l):
        worst = max(worst, abs(er - right(x)), abs(el - left(x)))
    return DKWResult(float(worst), bool(worst <= dkw_band(R, alpha)))
