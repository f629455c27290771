"""Integrands: exact step functions, black-box oracles and observation noise."""

from __future__ import annotations

import itertools
import json
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .discrete import DiscreteDist
from .errors import PreconditionError, RangeError, StratError
from .measure_space import (
    BaseMeasure,
    Box,
    Partition,
    Rational,
    Stratum,
    as_fraction,
    fraction_str,
    region_volume,
)


def _require_uniform(base: BaseMeasure | None) -> None:
    if base is not None and not base.is_uniform:
        raise PreconditionError("exact computations need the uniform base law")


@dataclass(frozen=True)
class PiecewiseConstantFn:
    """Step function with rational values on a disjoint box cover of [0,1]^d."""

    cells: tuple[tuple[Box, Fraction], ...]
    declared_range: bool = False

    def __post_init__(self):
        cells = tuple((box, as_fraction(v)) for box, v in self.cells)
        object.__setattr__(self, "cells", cells)
        if not cells:
            raise StratError("function needs at least one cell")
        d = cells[0][0].dimension
        if any(b.dimension != d for b, _ in cells):
            raise StratError("cells differ in dimension")
        if sum((b.volume for b, _ in cells), Fraction(0)) != 1:
            raise StratError("cells do not cover [0,1]^d")
        for (a, _), (b, _) in itertools.combinations(cells, 2):
            if a.overlap(b) != 0:
                raise StratError("cells overlap")
        if self.declared_range and any(not 0 <= v <= 1 for _, v in cells):
            raise RangeError("declared_range is set but some values fall outside [0,1]")

    @classmethod
    def constant(cls, c: Rational, d: int = 1, declared_range: bool = False):
        return cls(((Box.unit(d), as_fraction(c)),), declared_range)

    @classmethod
    def step(cls, breaks: Sequence[Rational], values: Sequence[Rational], declared_range=False):
        """One-dimensional step function: ``values[i]`` on (breaks[i-1], breaks[i]]."""
        pts = [Fraction(0), *(as_fraction(b) for b in breaks), Fraction(1)]
        if len(values) != len(pts) - 1:
            raise StratError("need one value per interval")
        return cls(
            tuple((Box((a,), (b,)), v) for a, b, v in zip(pts, pts[1:], values)),
            declared_range,
        )

    @classmethod
    def grid(cls, cuts: Sequence[Sequence[Rational]], values, declared_range=False):
        """Step function on a product grid; ``values`` is indexed like the grid cells."""
        axes = []
        for c in cuts:
            pts = [Fraction(0), *(as_fraction(x) for x in c), Fraction(1)]
            axes.append(list(zip(pts, pts[1:])))
        arr = np.asarray(values, dtype=object)
        if arr.shape != tuple(len(a) for a in axes):
            raise StratError(f"values shape {arr.shape} does not match grid")
        cells = []
        for idx in itertools.product(*(range(len(a)) for a in axes)):
            edges = [axes[j][i] for j, i in enumerate(idx)]
            cells.append((Box(tuple(e[0] for e in edges), tuple(e[1] for e in edges)), arr[idx]))
        return cls(tuple(cells), declared_range)

    @property
    def dimension(self) -> int:
        return self.cells[0][0].dimension

    @property
    def values(self) -> tuple[Fraction, ...]:
        return tuple(v for _, v in self.cells)

    def __call__(self, u) -> Fraction:
        return evaluate(self, u)

    # vectorised lookup used by the Monte Carlo estimators
    @cached_property
    def _float_boxes(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([[float(a) for a in b.lower] for b, _ in self.cells])
        hi = np.array([[float(a) for a in b.upper] for b, _ in self.cells])
        return lo, hi

    @cached_property
    def value_scale(self) -> int:
        """Least common denominator of the values."""
        return math.lcm(*(v.denominator for v in self.values))

    @cached_property
    def scaled_values(self) -> np.ndarray:
        """Values times ``value_scale`` as integers."""
        L = self.value_scale
        return np.array([int(v * L) for v in self.values], dtype=object)

    @cached_property
    def float_values(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def cell_indices(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        lo, hi = self._float_boxes
        x = pts[:, None, :]
        inside = ((x > lo) | ((lo == 0) & (x >= 0))) & (x <= hi)
        hit = inside.all(axis=2)
        if not hit.any(axis=1).all():
            raise StratError("point outside [0,1]^d")
        return hit.argmax(axis=1)


def evaluate(f: PiecewiseConstantFn, u) -> Fraction:
    """Value of ``f`` at ``u``; scalars are accepted for d = 1."""
    if np.ndim(u) == 0:
        u = (u,)
    u = tuple(as_fraction(x) for x in u)
    if len(u) != f.dimension or any(not 0 <= x <= 1 for x in u):
        raise StratError(f"point {u} is outside [0,1]^{f.dimension}")
    for box, v in f.cells:
        if box.contains(u):
            return v
    raise StratError(f"no cell contains {u}")


def region_value_dist(f: PiecewiseConstantFn, region: Sequence[Box]) -> DiscreteDist:
    mass = region_volume(region)
    if mass == 0:
        raise StratError("zero-mass region")
    return DiscreteDist.from_pairs(
        (v, sum((cell.overlap(b) for b in region), Fraction(0)) / mass) for cell, v in f.cells
    )


def stratum_value_dist(
    f: PiecewiseConstantFn, s: Stratum, base: BaseMeasure | None = None
) -> DiscreteDist:
    """Law of f(V) for V drawn from the base law conditioned on the stratum."""
    _require_uniform(base)
    return region_value_dist(f, s.region)


def stratum_mean(f: PiecewiseConstantFn, s: Stratum, base: BaseMeasure | None = None) -> Fraction:
    return stratum_value_dist(f, s, base).mean


def global_mean(f: PiecewiseConstantFn, base: BaseMeasure | None = None) -> Fraction:
    _require_uniform(base)
    return sum((b.volume * v for b, v in f.cells), Fraction(0))


def ess_sup(f: PiecewiseConstantFn) -> Fraction:
    return max(v for b, v in f.cells if b.volume > 0)


def is_monotone(f: PiecewiseConstantFn) -> bool:
    """Non-decreasing in every coordinate, checked on the common refinement grid."""
    d = f.dimension
    edges = []
    for j in range(d):
        pts = sorted({b.lower[j] for b, _ in f.cells} | {b.upper[j] for b, _ in f.cells})
        edges.append([(a + b) / 2 for a, b in zip(pts, pts[1:])])
    shape = tuple(len(e) for e in edges)
    vals = np.empty(shape, dtype=object)
    for idx in itertools.product(*(range(s) for s in shape)):
        vals[idx] = evaluate(f, [edges[j][i] for j, i in enumerate(idx)])
    for axis in range(d):
        lo = np.take(vals, range(shape[axis] - 1), axis=axis)
        hi = np.take(vals, range(1, shape[axis]), axis=axis)
        if np.any(lo > hi):
            return False
    return True


class FunctionOracle:
    """Black-box integrand that counts its evaluations.

    Only the Monte Carlo estimators accept oracles; there is no exact law
    for them. The counter is guarded by a lock so concurrent replications
    report the true number of calls.
    """

    def __init__(self, evaluator: Callable[[np.ndarray], float], dimension: int = 1,
                 declared_range: bool = False):
        self.evaluator = evaluator
        self.dimension = dimension
        self.declared_range = declared_range
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def cost(self) -> int:
        return self._calls

    def __call__(self, u) -> float:
        with self._lock:
            self._calls += 1
        return float(self.evaluator(np.asarray(u, dtype=float)))

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        return np.array([self(p) for p in np.asarray(points, dtype=float)])


NOISE_KINDS = ("none", "gaussian", "two_point")


@dataclass(frozen=True)
class NoiseSpec:
    """Mean-zero observation error.

    ``param`` is the variance for ``gaussian`` and the half-width c of the
    symmetric two-point law on {-c, +c}.
    """

    kind: str = "none"
    param: Fraction = field(default=Fraction(0))

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise StratError(f"unknown noise kind {self.kind!r}")
        p = as_fraction(self.param)
        if p < 0:
            raise StratError("noise parameter must be non-negative")
        if self.kind == "none":
            p = Fraction(0)
        object.__setattr__(self, "param", p)

    @classmethod
    def gaussian(cls, variance: Rational) -> NoiseSpec:
        return cls("gaussian", as_fraction(variance))

    @classmethod
    def two_point(cls, c: Rational) -> NoiseSpec:
        return cls("two_point", as_fraction(c))

    @property
    def variance(self) -> Fraction:
        if self.kind == "two_point":
            return self.param**2
        return self.param

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.normal(0.0, math.sqrt(self.param), size)
        if self.kind == "two_point":
            return float(self.param) * rng.choice((-1.0, 1.0), size)
        return np.zeros(size)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "param": fraction_str(self.param)}

    @classmethod
    def from_dict(cls, data: dict | None) -> NoiseSpec:
        if not data:
            return cls()
        extra = set(data) - {"kind", "param"}
        if extra:
            raise StratError(f"unknown noise keys {sorted(extra)}; expected 'kind' and 'param'")
        return cls(data.get("kind", "none"), as_fraction(data.get("param", 0)))


def function_to_dict(f: PiecewiseConstantFn) -> dict:
    return {
        "d": f.dimension,
        "declared_range": f.declared_range,
        "cells": [{"box": b.to_json(), "value": fraction_str(v)} for b, v in f.cells],
    }


def function_from_dict(data: dict) -> PiecewiseConstantFn:
    cells = tuple((Box(*c["box"]), as_fraction(c["value"])) for c in data["cells"])
    return PiecewiseConstantFn(cells, bool(data.get("declared_range", False)))


def function_to_json(f: PiecewiseConstantFn, **kwargs) -> str:
    return json.dumps(function_to_dict(f), **kwargs)


def check_total_expectation(f: PiecewiseConstantFn, p: Partition) -> bool:
    """Law of total expectation over the strata of ``p``, exactly."""
    total = sum((s.mass * stratum_mean(f, s) for s in p.strata), Fraction(0))
    return total == global_mean(f)
