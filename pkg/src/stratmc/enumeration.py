"""Brute-force enumeration over joint draw outcomes.

A slow, independent route to the laws computed in :mod:`stratmc.exact_dist`.
Each draw is enumerated over the function's cells (not over merged values),
and censoring is handled by enumerating acceptance patterns or threshold
subsets explicitly rather than through any product formula.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from fractions import Fraction
from typing import Iterator

from .discrete import DiscreteDist
from .errors import StratError
from .function_model import PiecewiseConstantFn
from .measure_space import Partition, as_fraction

MAX_OUTCOMES = 2_000_000


def _draw_options(f: PiecewiseConstantFn, p: Partition) -> list[list[tuple[Fraction, Fraction]]]:
    opts = []
    for s in p.strata:
        mass = s.mass
        cell_opts = []
        for cell, v in f.cells:
            w = sum((cell.overlap(b) for b in s.region), Fraction(0))
            if w:
                cell_opts.append((v, w / mass))
        opts.extend([cell_opts] * s.allocation)
    return opts


def joint_outcomes(f: PiecewiseConstantFn, p: Partition) -> Iterator[tuple[tuple, Fraction]]:
    """Yield (values of the n draws, probability) over every cell assignment."""
    opts = _draw_options(f, p)
    size = 1
    for o in opts:
        size *= len(o)
    if size > MAX_OUTCOMES:
        raise StratError(f"{size} joint outcomes is too many to enumerate")
    for combo in itertools.product(*opts):
        prob = Fraction(1)
        for _, w in combo:
            prob *= w
        yield tuple(v for v, _ in combo), prob


def enumerate_sup(f, p) -> DiscreteDist:
    acc = defaultdict(Fraction)
    for vals, prob in joint_outcomes(f, p):
        acc[max(vals)] += prob
    return DiscreteDist.from_mapping(acc)


def enumerate_integral(f, p) -> DiscreteDist:
    acc = defaultdict(Fraction)
    for vals, prob in joint_outcomes(f, p):
        acc[sum(vals, Fraction(0)) / p.n] += prob
    return DiscreteDist.from_mapping(acc)


def enumerate_integral_censored(f, p) -> DiscreteDist:
    """Acceptance T_j <= f(V_j) has probability f(V_j) for a uniform threshold."""
    acc = defaultdict(Fraction)
    for vals, prob in joint_outcomes(f, p):
        for pattern in itertools.product((0, 1), repeat=len(vals)):
            w = prob
            for hit, v in zip(pattern, vals):
                w *= v if hit else 1 - v
            if w:
                acc[Fraction(sum(pattern), p.n)] += w
    return DiscreteDist.from_mapping(acc)


def enumerate_censored_sup_cdf(f, p, t) -> Fraction:
    """P(W_CS <= t) summed over accepted-index subsets R of the n draws."""
    t = as_fraction(t)
    if t < 0:
        return Fraction(0)
    if t >= 1:
        return Fraction(1)
    total = Fraction(0)
    for vals, prob in joint_outcomes(f, p):
        cond = Fraction(0)
        for R in itertools.product((False, True), repeat=len(vals)):
            term = Fraction(1)
            for inside, v in zip(R, vals):
                term *= min(t, v) if inside else 1 - v
            cond += term
        total += prob * cond
    return total


def _poly_mul(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def censored_sup_cdf_polynomials(f, p) -> list[tuple[Fraction, Fraction, list[Fraction]]]:
    """P(W_CS <= t) as a polynomial in t on each interval between f's values and {0, 1}.

    Returns (left end, right end, ascending coefficients) per interval. On an
    interval, t ^ v is the constant v when v lies at or below it and t itself
    otherwise, so the subset sum is a polynomial there.
    """
    bps = sorted(set(f.values) | {Fraction(0), Fraction(1)})
    outcomes = list(joint_outcomes(f, p))
    polys = []
    for a, b in zip(bps, bps[1:]):
        acc = [Fraction(0)] * (p.n + 1)
        for vals, prob in outcomes:
            for R in itertools.product((False, True), repeat=len(vals)):
                term = [prob]
                for inside, v in zip(R, vals):
                    if inside:
                        term = _poly_mul(term, [v] if v <= a else [Fraction(0), Fraction(1)])
                    else:
                        term = _poly_mul(term, [1 - v])
                for k, c in enumerate(term):
                    acc[k] += c
        polys.append((a, b, acc))
    return polys


def eval_piecewise_polynomial(polys, t) -> Fraction:
    t = as_fraction(t)
    if t < 0:
        return Fraction(0)
    if t >= 1:
        return Fraction(1)
    for a, b, coeffs in polys:
        if a <= t <= b:
            out = Fraction(0)
            for c in reversed(coeffs):
                out = out * t + c
            return out
    raise StratError(f"t={t} not covered")
