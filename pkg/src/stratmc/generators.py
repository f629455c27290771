"""Seeded generators of random (function, coarse partition, fine partition) instances.

Function values are rationals with denominator at most ``value_denom``
(default 64); grids have at most 8 cells per axis; split sequences have at
most 6 steps. These bounds keep the exact convolutions small.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import GeneratorInfeasibleError
from .function_model import PiecewiseConstantFn, function_to_dict
from .measure_space import (
    BaseMeasure,
    Box,
    Partition,
    RefinementWitness,
    Stratum,
    coarsest_partition,
    merge_strata,
    refinement_witness,
    split_stratum,
)

MAX_CELLS_PER_AXIS = 8
MAX_SPLITS = 6


def trial_rng(seed: int, trial: int) -> random.Random:
    """Independent generator per (seed, trial); string seeds hash deterministically."""
    return random.Random(f"stratmc:{seed}:{trial}")


@dataclass
class Instance:
    f: PiecewiseConstantFn
    coarse: Partition
    fine: Partition
    witness: RefinementWitness
    chain: list[Partition] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "function": function_to_dict(self.f),
            "coarse": self.coarse.to_dict(),
            "fine": self.fine.to_dict(),
            "witness": self.witness.as_dict(),
        }


def random_step_function(
    rng: random.Random,
    max_cells: int = 8,
    max_values: int = 5,
    value_denom: int = 64,
    break_denom: int = 16,
    monotone: bool = False,
    unit_range: bool = True,
) -> PiecewiseConstantFn:
    """Random one-dimensional step function with at most ``max_values`` distinct values."""
    max_cells = min(max_cells, MAX_CELLS_PER_AXIS, break_denom)
    n_cells = rng.randint(1, max_cells)
    breaks = sorted(rng.sample(range(1, break_denom), n_cells - 1))
    k = rng.randint(1, min(max_values, n_cells))
    if unit_range:
        pool = rng.sample(range(value_denom + 1), k)
    else:
        pool = rng.sample(range(-2 * value_denom, 2 * value_denom + 1), k)
    values = [Fraction(rng.choice(pool), value_denom) for _ in range(n_cells)]
    if monotone:
        values.sort()
    return PiecewiseConstantFn.step(
        [Fraction(b, break_denom) for b in breaks], values, declared_range=unit_range
    )


def random_monotone_grid_function(
    rng: random.Random, d: int = 2, max_cells_per_axis: int = 4, value_denom: int = 64
) -> PiecewiseConstantFn:
    """Random step function on a product grid, non-decreasing along every axis, values in [0,1]."""
    max_cells_per_axis = min(max_cells_per_axis, MAX_CELLS_PER_AXIS)
    cuts, shape = [], []
    for _ in range(d):
        m = rng.randint(1, max_cells_per_axis)
        pts = sorted(rng.sample(range(1, 8), m - 1))
        cuts.append([Fraction(x, 8) for x in pts])
        shape.append(m)
    step = max(1, value_denom // sum(shape))
    vals: dict[tuple, int] = {}
    for idx in itertools.product(*(range(s) for s in shape)):
        below = [vals[idx[:j] + (idx[j] - 1,) + idx[j + 1:]] for j in range(d) if idx[j] > 0]
        vals[idx] = min(value_denom, max(below, default=0) + rng.randint(0, step))
    arr = np.empty(shape, dtype=object)
    for idx, v in vals.items():
        arr[idx] = Fraction(v, value_denom)
    return PiecewiseConstantFn.grid(cuts, arr, declared_range=True)


def _composition(rng: random.Random, n: int, parts: int) -> list[int]:
    cuts = sorted(rng.sample(range(1, n), parts - 1))
    return [b - a for a, b in zip([0, *cuts], [*cuts, n])]


def random_grouping(rng: random.Random, m: int, contiguous: bool) -> list[list[int]]:
    """Random grouping of range(m) into non-empty groups."""
    parts = rng.randint(1, m)
    sizes = _composition(rng, m, parts)
    order = list(range(m))
    if not contiguous:
        rng.shuffle(order)
    groups, start = [], 0
    for s in sizes:
        groups.append(sorted(order[start:start + s]))
        start += s
    if not contiguous:
        rng.shuffle(groups)
    return groups


def random_fine_partition_1d(rng: random.Random, n: int, monotone: bool = False) -> Partition:
    """Partition of [0,1] into strata that are unions of equal elementary intervals."""
    m = 1 if monotone else rng.choice((1, 2))
    cells = [Box((Fraction(i, m * n),), (Fraction(i + 1, m * n),)) for i in range(m * n)]
    sizes = _composition(rng, n, rng.randint(1, n))
    order = list(range(m * n))
    if not monotone:
        rng.shuffle(order)
    strata, start = [], 0
    for k in sizes:
        idx = sorted(order[start:start + m * k])
        strata.append(Stratum(tuple(cells[i] for i in idx), k))
        start += m * k
    if not monotone:
        rng.shuffle(strata)
    return Partition(tuple(strata), n, BaseMeasure(1))


def random_split_sequence(
    rng: random.Random, n: int, d: int = 1, length: int = 4
) -> list[Partition]:
    """Partitions obtained from the coarsest one by axis-threshold splits."""
    length = min(length, MAX_SPLITS)
    seq = [coarsest_partition(n, BaseMeasure(d))]
    for _ in range(length):
        p = seq[-1]
        candidates = [i for i, s in enumerate(p.strata) if s.allocation >= 2]
        if not candidates:
            break
        i = rng.choice(candidates)
        (box,) = p.strata[i].region
        k = p.strata[i].allocation
        axis = rng.randrange(d)
        m = rng.randint(1, k - 1)
        a = box.lower[axis] + (box.upper[axis] - box.lower[axis]) * Fraction(m, k)
        seq.append(split_stratum(p, i, axis, a)[0])
    return seq


def random_refinement_pair(
    rng: random.Random, n: int, mode: str | None = None, monotone: bool = False
) -> tuple[Partition, Partition, RefinementWitness, list[Partition]]:
    """Random coarse/fine pair on [0,1], by merging strata or by a split sequence.

    With ``monotone`` both partitions are ordered left to right; split
    sequences on [0,1] are always so because the lower piece comes first.
    """
    mode = mode or rng.choice(("merge", "split"))
    if mode == "split":
        seq = random_split_sequence(rng, n, 1, rng.randint(0, 4))
        i = rng.randrange(len(seq))
        j = rng.randrange(i, len(seq))
        coarse, fine, chain = seq[i], seq[j], seq[i:j + 1]
    else:
        fine = random_fine_partition_1d(rng, n, monotone)
        groups = random_grouping(rng, len(fine.strata), contiguous=monotone)
        coarse, _ = merge_strata(fine, groups)
        chain = [coarse, fine]
    return coarse, fine, refinement_witness(coarse, fine), chain


def random_instance(
    rng: random.Random,
    max_n: int = 6,
    max_values: int = 5,
    max_cells: int = 8,
    unit_range: bool = True,
    monotone: bool = False,
) -> Instance:
    n = rng.randint(1, max_n)
    f = random_step_function(rng, max_cells, max_values, monotone=monotone, unit_range=unit_range)
    coarse, fine, witness, chain = random_refinement_pair(rng, n, None, monotone)
    return Instance(f, coarse, fine, witness, chain)


def random_split_instance(
    rng: random.Random, max_n: int = 8, max_splits: int = 4, d: int = 2, max_cells_per_axis: int = 4
) -> Instance:
    """Monotone f on [0,1]^d with a split sequence from the coarsest partition."""
    if max_n < 2:
        raise GeneratorInfeasibleError("a split needs n >= 2 so both pieces get a draw")
    n = rng.randint(2, max_n)
    f = random_monotone_grid_function(rng, d, max_cells_per_axis)
    seq = random_split_sequence(rng, n, d, rng.randint(1, max_splits))
    if len(seq) < 2:
        raise GeneratorInfeasibleError("no split with integral allocations exists")
    witness = refinement_witness(seq[0], seq[-1])
    return Instance(f, seq[0], seq[-1], witness, seq)


def random_majorization_pair(rng: random.Random, max_n: int = 6, denom: int = 32):
    """(p, q) with p majorized by q: p = D q for a random doubly stochastic D.

    D is a convex combination of random permutation matrices, so entries of p
    stay in [0,1] whenever those of q do.
    """
    n = rng.randint(1, max_n)
    q = [Fraction(rng.randint(0, denom), denom) for _ in range(n)]
    k = rng.randint(1, 3)
    weights = [rng.randint(1, 4) for _ in range(k)]
    total = sum(weights)
    p = [Fraction(0)] * n
    for w in weights:
        perm = list(range(n))
        rng.shuffle(perm)
        for i in range(n):
            p[i] += Fraction(w, total) * q[perm[i]]
    return p, q
