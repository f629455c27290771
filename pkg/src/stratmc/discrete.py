"""Finite distributions with rational support and rational probabilities."""

from __future__ import annotations

import bisect
import csv
import io
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .errors import StratError
from .measure_space import as_fraction, fraction_str


@dataclass(frozen=True)
class DiscreteDist:
    support: tuple[Fraction, ...]
    probs: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.support) != len(self.probs) or not self.support:
            raise StratError("support and probs must be non-empty and of equal length")
        if any(b <= a for a, b in zip(self.support, self.support[1:])):
            raise StratError("support must be strictly increasing")
        if any(p <= 0 for p in self.probs):
            raise StratError("probabilities must be positive")
        if sum(self.probs) != 1:
            raise StratError(f"probabilities sum to {sum(self.probs)}, not 1")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[object, object]]) -> DiscreteDist:
        """Build from (value, probability) pairs, merging repeats and dropping zeros."""
        acc: dict[Fraction, Fraction] = defaultdict(Fraction)
        for v, p in pairs:
            acc[as_fraction(v)] += as_fraction(p)
        items = sorted((v, p) for v, p in acc.items() if p != 0)
        return cls(tuple(v for v, _ in items), tuple(p for _, p in items))

    @classmethod
    def from_mapping(cls, mapping: Mapping) -> DiscreteDist:
        return cls.from_pairs(mapping.items())

    @classmethod
    def point_mass(cls, value) -> DiscreteDist:
        return cls((as_fraction(value),), (Fraction(1),))

    @classmethod
    def mixture(cls, components: Sequence[tuple[Fraction, DiscreteDist]]) -> DiscreteDist:
        """Mixture with (weight, law) components; weights must sum to 1."""
        if sum(w for w, _ in components) != 1:
            raise StratError("mixture weights must sum to 1")
        return cls.from_pairs(
            (v, w * p) for w, dist in components for v, p in zip(dist.support, dist.probs)
        )

    def as_dict(self) -> dict[Fraction, Fraction]:
        return dict(zip(self.support, self.probs))

    def items(self):
        return zip(self.support, self.probs)

    def expect(self, fn: Callable[[Fraction], Fraction]) -> Fraction:
        return sum((p * fn(v) for v, p in self.items()), Fraction(0))

    @property
    def mean(self) -> Fraction:
        return self.expect(lambda v: v)

    @property
    def variance(self) -> Fraction:
        m = self.mean
        return self.expect(lambda v: (v - m) ** 2)

    @property
    def min(self) -> Fraction:
        return self.support[0]

    @property
    def max(self) -> Fraction:
        return self.support[-1]

    def cdf(self, t) -> Fraction:
        """P(X <= t)."""
        i = bisect.bisect_right(self.support, as_fraction(t))
        return sum(self.probs[:i], Fraction(0))

    def cdf_left(self, t) -> Fraction:
        """P(X < t)."""
        i = bisect.bisect_left(self.support, as_fraction(t))
        return sum(self.probs[:i], Fraction(0))

    def cdf_table(self) -> list[tuple[Fraction, Fraction]]:
        out, acc = [], Fraction(0)
        for v, p in self.items():
            acc += p
            out.append((v, acc))
        return out

    def stop_loss(self, t) -> Fraction:
        """E[(X - t)_+]."""
        t = as_fraction(t)
        return sum((p * (v - t) for v, p in self.items() if v > t), Fraction(0))

    def map(self, fn: Callable[[Fraction], Fraction]) -> DiscreteDist:
        return DiscreteDist.from_pairs((fn(v), p) for v, p in self.items())

    def scale(self, c) -> DiscreteDist:
        c = as_fraction(c)
        return self.map(lambda v: v * c)

    def convolve(self, other: DiscreteDist) -> DiscreteDist:
        return DiscreteDist.from_pairs(
            (a + b, p * q) for a, p in self.items() for b, q in other.items()
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "probability", "probability_decimal"])
        for v, p in self.items():
            w.writerow([fraction_str(v), fraction_str(p), f"{float(p):.17g}"])
        return buf.getvalue()

    def __str__(self) -> str:
        body = ", ".join(f"{fraction_str(v)}: {fraction_str(p)}" for v, p in self.items())
        return "{" + body + "}"
