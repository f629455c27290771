"""Sample space [0,1]^d, box strata, partitions and refinements.

Strata are finite unions of axis-aligned boxes with rational corners. A box
owns its upper faces and its lower faces except where the lower face sits
on 0, in which case the face is owned too; with this convention boxes whose
interiors are disjoint are disjoint as sets, and a grid of boxes tiles
[0,1]^d exactly.

Stratum masses are computed in the probability coordinates of the base law
(volume of the box). A non-uniform base law is applied afterwards, one axis
at a time, through a quantile transform.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Sequence

import jsonschema
import numpy as np

from .errors import (
    AllocationError,
    DimensionError,
    EmptyPieceError,
    MassMismatchError,
    NotARefinementError,
    StratError,
)

Rational = Fraction | int | str


def as_fraction(x) -> Fraction:
    """Convert ints, strings like ``"3/4"`` and floats (by their repr) to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def fraction_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class BaseMeasure:
    """Product law on [0,1]^d.

    ``marginals`` holds one quantile transform per axis (``None`` means the
    identity, i.e. the uniform law). Each transform must be non-decreasing,
    map [0,1] into [0,1] and accept numpy arrays.
    """

    dimension: int = 1
    marginals: tuple[Callable[[np.ndarray], np.ndarray] | None, ...] | None = None

    def __post_init__(self):
        if self.dimension < 1:
            raise DimensionError("dimension must be a positive integer")
        if self.marginals is not None:
            if len(self.marginals) != self.dimension:
                raise DimensionError("need one marginal quantile transform per axis")
            object.__setattr__(self, "marginals", tuple(self.marginals))

    @property
    def is_uniform(self) -> bool:
        return self.marginals is None or all(m is None for m in self.marginals)

    def transform(self, w: np.ndarray) -> np.ndarray:
        """Map uniform probability coordinates of shape (m, d) to sample points."""
        if self.is_uniform:
            return w
        out = np.empty_like(w)
        for j, q in enumerate(self.marginals):
            out[:, j] = w[:, j] if q is None else q(w[:, j])
        return out


@dataclass(frozen=True)
class Box:
    lower: tuple[Fraction, ...]
    upper: tuple[Fraction, ...]

    def __post_init__(self):
        lo = tuple(as_fraction(v) for v in self.lower)
        hi = tuple(as_fraction(v) for v in self.upper)
        if len(lo) != len(hi):
            raise DimensionError("lower and upper corners differ in dimension")
        for a, b in zip(lo, hi):
            if not (0 <= a <= b <= 1):
                raise StratError(f"invalid box edge [{a}, {b}]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, d: int) -> Box:
        return cls((Fraction(0),) * d, (Fraction(1),) * d)

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> Fraction:
        v = Fraction(1)
        for a, b in zip(self.lower, self.upper):
            v *= b - a
        return v

    @property
    def closed_lower(self) -> tuple[bool, ...]:
        return tuple(a == 0 for a in self.lower)

    def intersect(self, other: Box) -> Box | None:
        lo = tuple(max(a, b) for a, b in zip(self.lower, other.lower))
        hi = tuple(min(a, b) for a, b in zip(self.upper, other.upper))
        if any(a >= b for a, b in zip(lo, hi)):
            return None
        return Box(lo, hi)

    def overlap(self, other: Box) -> Fraction:
        inter = self.intersect(other)
        return Fraction(0) if inter is None else inter.volume

    def contains(self, u: Sequence) -> bool:
        for x, a, b, closed in zip(u, self.lower, self.upper, self.closed_lower):
            if x > b or x < a or (x == a and not closed):
                return False
        return True

    def cut(self, axis: int, threshold: Fraction) -> tuple[Box | None, Box | None]:
        """Split into the pieces below and at-or-above ``threshold`` on ``axis``."""
        a, b = self.lower[axis], self.upper[axis]
        if threshold <= a:
            return None, self
        if threshold >= b:
            return self, None
        lo_hi = list(self.upper)
        lo_hi[axis] = threshold
        hi_lo = list(self.lower)
        hi_lo[axis] = threshold
        return Box(self.lower, tuple(lo_hi)), Box(tuple(hi_lo), self.upper)

    def to_json(self) -> list:
        return [[fraction_str(v) for v in self.lower], [fraction_str(v) for v in self.upper]]


def region_volume(boxes: Iterable[Box]) -> Fraction:
    return sum((b.volume for b in boxes), Fraction(0))


def region_overlap(a: Iterable[Box], b: Sequence[Box]) -> Fraction:
    return sum((x.overlap(y) for x in a for y in b), Fraction(0))


@dataclass(frozen=True)
class Stratum:
    region: tuple[Box, ...]
    allocation: int

    def __post_init__(self):
        object.__setattr__(self, "region", tuple(self.region))
        if not self.region:
            raise EmptyPieceError("stratum has no boxes")
        if self.allocation < 1:
            raise AllocationError("allocation must be a positive integer")

    @property
    def mass(self) -> Fraction:
        return region_volume(self.region)

    def contains(self, u: Sequence) -> bool:
        return any(b.contains(u) for b in self.region)


@dataclass(frozen=True)
class RefinementWitness:
    """``mapping[c]`` lists the fine strata whose union is coarse stratum ``c``."""

    mapping: tuple[tuple[int, ...], ...]

    def compose(self, finer: RefinementWitness) -> RefinementWitness:
        """Chain ``self`` (coarse -> mid) with ``finer`` (mid -> fine)."""
        return RefinementWitness(
            tuple(tuple(f for m in mids for f in finer.mapping[m]) for mids in self.mapping)
        )

    def as_dict(self) -> dict[int, list[int]]:
        return {c: list(fs) for c, fs in enumerate(self.mapping)}


@dataclass(frozen=True)
class Partition:
    """Ordered partition of [0,1]^d with stratum masses ``k_i / n``."""

    strata: tuple[Stratum, ...]
    n: int
    base: BaseMeasure = field(default_factory=BaseMeasure)

    def __post_init__(self):
        object.__setattr__(self, "strata", tuple(self.strata))
        d = self.base.dimension
        total_k = 0
        for i, s in enumerate(self.strata):
            if any(b.dimension != d for b in s.region):
                raise DimensionError(f"stratum {i} has boxes of the wrong dimension")
            if s.mass != Fraction(s.allocation, self.n):
                raise AllocationError(
                    f"stratum {i} has mass {s.mass}, expected {s.allocation}/{self.n}"
                )
            total_k += s.allocation
        if total_k != self.n:
            raise AllocationError(f"allocations sum to {total_k}, expected {self.n}")
        boxes = [(i, b) for i, s in enumerate(self.strata) for b in s.region]
        for (i, a), (j, b) in itertools.combinations(boxes, 2):
            if a.overlap(b) != 0:
                raise StratError(f"strata {i} and {j} overlap")

    @property
    def dimension(self) -> int:
        return self.base.dimension

    @property
    def allocations(self) -> tuple[int, ...]:
        return tuple(s.allocation for s in self.strata)

    @property
    def masses(self) -> tuple[Fraction, ...]:
        return tuple(s.mass for s in self.strata)

    @cached_property
    def index_partition(self) -> tuple[tuple[int, ...], ...]:
        """Consecutive 1-based sample indices assigned to each stratum."""
        out, start = [], 1
        for k in self.allocations:
            out.append(tuple(range(start, start + k)))
            start += k
        return tuple(out)

    @cached_property
    def draw_strata(self) -> np.ndarray:
        """Stratum index of each of the n draws, in sample-index order."""
        return np.repeat(np.arange(len(self.strata)), self.allocations)

    def locate(self, u: Sequence) -> int:
        for i, s in enumerate(self.strata):
            if s.contains(u):
                return i
        raise StratError(f"point {u} is outside [0,1]^{self.dimension}")

    def to_dict(self) -> dict:
        return {
            "d": self.dimension,
            "n": self.n,
            "strata": [
                {"boxes": [b.to_json() for b in s.region], "k": s.allocation}
                for s in self.strata
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @cached_property
    def digest(self) -> str:
        return hashlib.sha256(self.to_json(sort_keys=True).encode()).hexdigest()[:12]


_RATIONAL = {"type": ["string", "integer"]}
_CORNER = {"type": "array", "items": _RATIONAL, "minItems": 1}

PARTITION_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "Partition",
    "type": "object",
    "required": ["d", "n", "strata"],
    "properties": {
        "d": {"type": "integer", "minimum": 1},
        "n": {"type": "integer", "minimum": 1},
        "strata": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["boxes", "k"],
                "properties": {
                    "boxes": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "array",
                            "items": _CORNER,
                            "minItems": 2,
                            "maxItems": 2,
                        },
                    },
                    "k": {"type": "integer", "minimum": 1},
                },
            },
        },
    },
}


def partition_from_dict(data: dict, base: BaseMeasure | None = None) -> Partition:
    jsonschema.validate(data, PARTITION_SCHEMA)
    if base is None:
        base = BaseMeasure(data["d"])
    elif base.dimension != data["d"]:
        raise DimensionError("base measure dimension does not match partition")
    strata = [
        Stratum(tuple(Box(lo, hi) for lo, hi in s["boxes"]), s["k"]) for s in data["strata"]
    ]
    return Partition(tuple(strata), data["n"], base)


def partition_from_json(text: str, base: BaseMeasure | None = None) -> Partition:
    return partition_from_dict(json.loads(text), base)


def coarsest_partition(n: int, base: BaseMeasure | None = None) -> Partition:
    if n < 1:
        raise AllocationError("n must be at least 1")
    base = base or BaseMeasure()
    return Partition((Stratum((Box.unit(base.dimension),), n),), n, base)


def finest_partition(
    n: int, base: BaseMeasure | None = None, cuts: Sequence[Sequence[Rational]] | None = None
) -> Partition:
    """Grid partition into n cells of mass 1/n each.

    ``cuts[j]`` lists the interior cut points on axis j. For d = 1 the cuts
    default to the equally spaced points i/n.
    """
    base = base or BaseMeasure()
    d = base.dimension
    if cuts is None:
        if d != 1:
            raise DimensionError("cuts are required when d > 1")
        cuts = [[Fraction(i, n) for i in range(1, n)]]
    if len(cuts) != d:
        raise DimensionError(f"expected cuts for {d} axes, got {len(cuts)}")
    edges = []
    for axis_cuts in cuts:
        pts = sorted({as_fraction(c) for c in axis_cuts} - {Fraction(0), Fraction(1)})
        pts = [Fraction(0), *pts, Fraction(1)]
        edges.append(list(zip(pts[:-1], pts[1:])))
    cells = [
        Box(tuple(e[0] for e in combo), tuple(e[1] for e in combo))
        for combo in itertools.product(*edges)
    ]
    if len(cells) != n:
        raise MassMismatchError(f"cuts produce {len(cells)} cells, expected {n}")
    for c in cells:
        if c.volume != Fraction(1, n):
            raise MassMismatchError(f"cell {c.to_json()} has mass {c.volume}, expected 1/{n}")
    return Partition(tuple(Stratum((c,), 1) for c in cells), n, base)


def refinement_witness(coarse: Partition, fine: Partition) -> RefinementWitness:
    """Certify that every coarse stratum is exactly a union of fine strata."""
    if coarse.n != fine.n or coarse.dimension != fine.dimension:
        raise NotARefinementError("partitions differ in n or dimension")
    if coarse.base != fine.base:
        raise NotARefinementError("partitions use different base measures")
    owner: list[int | None] = []
    for fs in fine.strata:
        home = None
        for c, cs in enumerate(coarse.strata):
            ov = region_overlap(fs.region, cs.region)
            if ov == fs.mass:
                home = c
                break
            if ov > 0:
                break
        owner.append(home)
    mapping = [[] for _ in coarse.strata]
    for f_idx, c in enumerate(owner):
        if c is not None:
            mapping[c].append(f_idx)
    for c, cs in enumerate(coarse.strata):
        covered = sum((fine.strata[f].mass for f in mapping[c]), Fraction(0))
        k = sum(fine.strata[f].allocation for f in mapping[c])
        if covered != cs.mass or k != cs.allocation:
            raise NotARefinementError(
                f"coarse stratum {c} is not a union of fine strata", coarse_index=c
            )
    return RefinementWitness(tuple(tuple(m) for m in mapping))


def split_stratum(
    p: Partition, i: int, axis: int, threshold: Rational
) -> tuple[Partition, RefinementWitness]:
    """Split stratum ``i`` by the upper set {x : threshold <= x[axis]}.

    The piece below the threshold takes position ``i`` and the upper piece
    follows it.
    """
    a = as_fraction(threshold)
    if not 0 <= axis < p.dimension:
        raise DimensionError(f"axis {axis} out of range for d={p.dimension}")
    target = p.strata[i]
    below, above = [], []
    for b in target.region:
        lo, hi = b.cut(axis, a)
        if lo is not None:
            below.append(lo)
        if hi is not None:
            above.append(hi)
    m_lo, m_hi = region_volume(below), region_volume(above)
    if m_lo == 0 or m_hi == 0:
        raise EmptyPieceError(f"threshold {a} on axis {axis} leaves an empty piece")
    k_lo, k_hi = m_lo * p.n, m_hi * p.n
    if k_lo.denominator != 1 or k_hi.denominator != 1:
        raise AllocationError(
            f"piece masses {m_lo}, {m_hi} are not multiples of 1/{p.n}"
        )
    pieces = (Stratum(tuple(below), int(k_lo)), Stratum(tuple(above), int(k_hi)))
    strata = p.strata[:i] + pieces + p.strata[i + 1 :]
    mapping = [(j,) for j in range(i)] + [(i, i + 1)] + [
        (j + 1,) for j in range(i + 1, len(p.strata))
    ]
    return Partition(strata, p.n, p.base), RefinementWitness(tuple(mapping))


def merge_strata(
    p: Partition, groups: Sequence[Sequence[int]]
) -> tuple[Partition, RefinementWitness]:
    """Coarsen ``p`` by merging each group of stratum indices into one stratum.

    Returns the coarse partition and the witness from it to ``p``.
    """
    flat = sorted(i for g in groups for i in g)
    if flat != list(range(len(p.strata))):
        raise StratError("groups must cover every stratum index exactly once")
    strata = []
    for g in groups:
        boxes = sorted(
            (b for i in g for b in p.strata[i].region), key=lambda b: (b.lower, b.upper)
        )
        strata.append(Stratum(tuple(boxes), sum(p.strata[i].allocation for i in g)))
    coarse = Partition(tuple(strata), p.n, p.base)
    return coarse, RefinementWitness(tuple(tuple(g) for g in groups))


def _interval_of(s: Stratum) -> tuple[Fraction, Fraction] | None:
    boxes = sorted(s.region, key=lambda b: b.lower)
    for left, right in zip(boxes, boxes[1:]):
        if left.upper[0] != right.lower[0]:
            return None
    return boxes[0].lower[0], boxes[-1].upper[0]


def is_monotone_partition(p: Partition) -> bool:
    if p.dimension != 1:
        raise DimensionError("monotone partitions are defined only for d = 1")
    prev_hi = Fraction(0)
    for s in p.strata:
        iv = _interval_of(s)
        if iv is None or iv[0] != prev_hi:
            return False
        prev_hi = iv[1]
    return True
