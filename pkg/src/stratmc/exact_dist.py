"""Exact finite-sample laws of the stratified estimators for step functions.

Everything here is rational arithmetic; floats never enter.
"""

from __future__ import annotations

import bisect
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .discrete import DiscreteDist
from .errors import RangeError, StratError, SupportSizeError
from .function_model import NoiseSpec, PiecewiseConstantFn, stratum_value_dist
from .measure_space import BaseMeasure, Partition, Stratum, as_fraction

DEFAULT_SUPPORT_CAP = 10**6
_DENSE_LIMIT = 200_000


def _require_unit_range(f: PiecewiseConstantFn) -> None:
    if not f.declared_range:
        raise RangeError("censored observations need f declared with range [0,1]")


def _stratum_laws(f, p: Partition, base) -> list[DiscreteDist]:
    return [stratum_value_dist(f, s, base) for s in p.strata]


def dist_sup(f: PiecewiseConstantFn, p: Partition, base: BaseMeasure | None = None) -> DiscreteDist:
    """Law of the stratified maximum: P(W <= t) = prod_B P(f <= t | B)^k_B."""
    laws = _stratum_laws(f, p, base or p.base)
    values = sorted(set(f.values))
    pairs, prev = [], Fraction(0)
    for t in values:
        F = Fraction(1)
        for law, k in zip(laws, p.allocations):
            F *= law.cdf(t) ** k
        pairs.append((t, F - prev))
        prev = F
    return DiscreteDist.from_pairs(pairs)


def q_coefficient(f: PiecewiseConstantFn, s: Stratum, base: BaseMeasure | None, t) -> Fraction:
    """E[(t ^ f(V)) + 1 - f(V)] for V drawn from the stratum."""
    _require_unit_range(f)
    t = as_fraction(t)
    if not 0 <= t <= 1:
        raise RangeError("t must lie in [0,1]")
    law = stratum_value_dist(f, s, base)
    return law.expect(lambda v: min(t, v) + 1 - v)


@dataclass(frozen=True)
class CensoredSupCdf:
    """CDF of the censored maximum, t -> prod_B q_B(t)^k_B.

    ``segments[i]`` holds, for stratum i, one (intercept, slope) pair per
    interval between consecutive breakpoints; q_B is linear on each.
    """

    breakpoints: tuple[Fraction, ...]
    segments: tuple[tuple[tuple[Fraction, Fraction], ...], ...]
    exponents: tuple[int, ...]

    def q(self, i: int, t) -> Fraction:
        t = as_fraction(t)
        m = min(max(bisect.bisect_right(self.breakpoints, t) - 1, 0), len(self.breakpoints) - 2)
        a, b = self.segments[i][m]
        return a + b * t

    def cdf(self, t) -> Fraction:
        t = as_fraction(t)
        if t < 0:
            return Fraction(0)
        if t >= 1:
            return Fraction(1)
        out = Fraction(1)
        for i, k in enumerate(self.exponents):
            out *= self.q(i, t) ** k
        return out

    __call__ = cdf

    def cdf_left(self, t) -> Fraction:
        t = as_fraction(t)
        return Fraction(0) if t <= 0 else self.cdf(t)

    @property
    def atom_at_zero(self) -> Fraction:
        return self.cdf(0)

    def evaluation_grid(self, per_segment: int = 64) -> list[Fraction]:
        """Breakpoints plus ``per_segment`` equally spaced interior points per segment."""
        pts = list(self.breakpoints)
        for a, b in zip(self.breakpoints, self.breakpoints[1:]):
            pts.extend(a + (b - a) * Fraction(j, per_segment + 1) for j in range(1, per_segment + 1))
        return sorted(pts)


def cdf_sup_censored(
    f: PiecewiseConstantFn, p: Partition, base: BaseMeasure | None = None
) -> CensoredSupCdf:
    _require_unit_range(f)
    bps = tuple(sorted(set(f.values) | {Fraction(0), Fraction(1)}))
    segments = []
    for law in _stratum_laws(f, p, base or p.base):
        segs = []
        for lo, hi in zip(bps, bps[1:]):
            intercept, slope = Fraction(0), Fraction(0)
            for v, pr in law.items():
                if v <= lo:
                    intercept += pr
                else:
                    intercept += pr * (1 - v)
                    slope += pr
            segs.append((intercept, slope))
        segments.append(tuple(segs))
    return CensoredSupCdf(bps, tuple(segments), p.allocations)


def _integer_weights(law: DiscreteDist, scale: int) -> tuple[int, list[int], int]:
    """Encode a law as (lowest scaled value, dense integer weights, weight total)."""
    nums = [int(v * scale) for v in law.support]
    denom = math.lcm(*(pr.denominator for pr in law.probs))
    lo = nums[0]
    w = [0] * (nums[-1] - lo + 1)
    for x, pr in zip(nums, law.probs):
        w[x - lo] = int(pr * denom)
    return lo, w, denom


def _dense_sum_law(laws, counts, scale: int, n: int, cap: int) -> DiscreteDist:
    acc = np.array([1], dtype=object)
    offset, total = 0, 1
    for law, k in zip(laws, counts):
        lo, w, denom = _integer_weights(law, scale)
        w = np.array(w, dtype=object)
        for _ in range(k):
            acc = np.convolve(acc, w)
            if np.count_nonzero(acc) > cap:
                raise SupportSizeError(f"support exceeds the cap of {cap} points")
        offset += k * lo
        total *= denom**k
    return DiscreteDist.from_pairs(
        (Fraction(offset + i, scale * n), Fraction(int(c), total))
        for i, c in enumerate(acc)
        if c != 0
    )


def _sparse_sum_law(laws, counts, n: int, cap: int) -> DiscreteDist:
    acc = {Fraction(0): Fraction(1)}
    for law, k in zip(laws, counts):
        for _ in range(k):
            nxt: dict[Fraction, Fraction] = defaultdict(Fraction)
            for a, pa in acc.items():
                for b, pb in law.items():
                    nxt[a + b] += pa * pb
            if len(nxt) > cap:
                raise SupportSizeError(f"support exceeds the cap of {cap} points")
            acc = nxt
    return DiscreteDist.from_pairs((v / n, pr) for v, pr in acc.items())


def dist_integral(
    f: PiecewiseConstantFn,
    p: Partition,
    base: BaseMeasure | None = None,
    support_cap: int = DEFAULT_SUPPORT_CAP,
) -> DiscreteDist:
    """Law of the noiseless stratified mean by exact convolution."""
    laws = _stratum_laws(f, p, base or p.base)
    scale = f.value_scale
    dense_len = sum(k * int((law.max - law.min) * scale) for law, k in zip(laws, p.allocations))
    if dense_len <= _DENSE_LIMIT:
        return _dense_sum_law(laws, p.allocations, scale, p.n, support_cap)
    return _sparse_sum_law(laws, p.allocations, p.n, support_cap)


def poisson_binomial(ps) -> DiscreteDist:
    """Law of the number of successes among independent Bernoulli(p_i) trials."""
    probs = [Fraction(1)]
    for q in map(as_fraction, ps):
        if not 0 <= q <= 1:
            raise RangeError("Bernoulli parameters must lie in [0,1]")
        nxt = [Fraction(0)] * (len(probs) + 1)
        for i, w in enumerate(probs):
            nxt[i] += w * (1 - q)
            nxt[i + 1] += w * q
        probs = nxt
    return DiscreteDist.from_pairs(enumerate(probs))


def censored_success_probs(f: PiecewiseConstantFn, p: Partition, base=None) -> list[Fraction]:
    """Per-draw acceptance probabilities P(T_j <= f(V_j)) = E[f | B], in draw order."""
    _require_unit_range(f)
    laws = _stratum_laws(f, p, base or p.base)
    return [law.mean for law, k in zip(laws, p.allocations) for _ in range(k)]


def dist_integral_censored(
    f: PiecewiseConstantFn, p: Partition, base: BaseMeasure | None = None
) -> DiscreteDist:
    ps = censored_success_probs(f, p, base)
    return poisson_binomial(ps).scale(Fraction(1, p.n))


def variance_integral_noisy(
    f: PiecewiseConstantFn,
    p: Partition,
    base: BaseMeasure | None = None,
    noise: NoiseSpec | None = None,
) -> Fraction:
    """(1/n) * (sum_B (k_B/n) Var[f | B] + sigma^2)."""
    sigma2 = (noise or NoiseSpec()).variance
    laws = _stratum_laws(f, p, base or p.base)
    within = sum(
        (Fraction(k, p.n) * law.variance for law, k in zip(laws, p.allocations)), Fraction(0)
    )
    return (within + sigma2) / p.n


def lp_loss(dist: DiscreteDist, center, power=1):
    """E|X - center|^power; exact for integer powers, float otherwise."""
    c = as_fraction(center)
    if power < 1:
        raise StratError("power must be at least 1")
    if float(power).is_integer():
        k = int(power)
        return dist.expect(lambda v: abs(v - c) ** k)
    return sum(float(pr) * abs(float(v - c)) ** power for v, pr in dist.items())
