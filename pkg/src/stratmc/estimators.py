"""Seeded Monte Carlo realisations of the stratified estimators.

Replicates are produced in fixed-size blocks; block ``b`` draws from its own
Philox stream keyed by ``(seed, b)``. Within a block the draws are consumed
in a fixed order: box selectors, positions, thresholds (censored kinds),
noise (noisy kind), each as a (replicates, n) array. Results therefore do
not depend on how blocks are scheduled across threads.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import RangeError, StratError
from .function_model import NoiseSpec, PiecewiseConstantFn
from .measure_space import BaseMeasure, Partition

KINDS = ("SUP", "CSUP", "INT", "INT_NOISY", "CINT")


@dataclass(frozen=True)
class DrawRecord:
    stratum: int
    index: int
    point: tuple[float, ...]
    threshold: float | None = None
    noise: float | None = None
    value: float | None = None
    accepted: bool | None = None

    def __post_init__(self):
        if self.threshold is not None and self.value is not None:
            raise StratError("censored draws must not carry f(V)")


class _Sampler:
    """Flattened box tables for conditional sampling within strata."""

    def __init__(self, p: Partition):
        lo, hi, keys = [], [], []
        for s_idx, s in enumerate(p.strata):
            acc = Fraction(0)
            mass = s.mass
            for b in s.region:
                acc += b.volume / mass
                lo.append([float(x) for x in b.lower])
                hi.append([float(x) for x in b.upper])
                keys.append(s_idx + float(acc))
        self.lo = np.array(lo)
        self.hi = np.array(hi)
        self.keys = np.array(keys)
        self.draw_strata = p.draw_strata
        counts = np.array([len(s.region) for s in p.strata])
        ends = np.cumsum(counts)
        self.first_box = (ends - counts)[self.draw_strata]
        self.last_box = ends[self.draw_strata] - 1

    def draw(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        """Points of shape (size, n, d): ``size`` independent stratified samples."""
        n, d = len(self.draw_strata), self.lo.shape[1]
        u = rng.random((size, n))
        box = np.searchsorted(self.keys, self.draw_strata + u, side="right")
        box = np.clip(box, self.first_box, self.last_box)
        w = 1.0 - rng.random((size, n, d))
        return self.lo[box] + w * (self.hi[box] - self.lo[box])


_SAMPLERS: dict[int, tuple[Partition, _Sampler]] = {}


def _sampler(p: Partition) -> _Sampler:
    hit = _SAMPLERS.get(id(p))
    if hit is None or hit[0] is not p:
        if len(_SAMPLERS) > 256:
            _SAMPLERS.clear()
        hit = (p, _Sampler(p))
        _SAMPLERS[id(p)] = hit
    return hit[1]


def sample_points(p: Partition, base: BaseMeasure | None, rng: np.random.Generator,
                  size: int = 1) -> np.ndarray:
    """Stratified draws of shape (size, n, d) from the base law conditioned on each stratum."""
    pts = _sampler(p).draw(rng, size)
    return (base or p.base).transform(pts.reshape(-1, p.dimension)).reshape(pts.shape)


def sample_stratum_rejection(
    p: Partition, i: int, rng: np.random.Generator, size: int, max_tries: int = 10**6
) -> np.ndarray:
    """Uniform points in stratum ``i`` by rejection from [0,1]^d (cross-check path)."""
    s = p.strata[i]
    out = []
    tries = 0
    while len(out) < size:
        tries += 1
        if tries > max_tries:
            raise StratError("rejection sampler exceeded its budget")
        x = 1.0 - rng.random(p.dimension)
        if s.contains(x):
            out.append(x)
    return p.base.transform(np.array(out))


def _observe(f, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
    """Float values f(V) of shape (size, n), plus integer-scaled values for step functions."""
    flat = pts.reshape(-1, pts.shape[-1])
    if isinstance(f, PiecewiseConstantFn):
        idx = f.cell_indices(flat).reshape(pts.shape[:2])
        return f.float_values[idx], f.scaled_values[idx]
    return np.asarray(f.evaluate_many(flat), dtype=float).reshape(pts.shape[:2]), None


def _exact_ratio(numerators, denominator: int) -> np.ndarray:
    # Python int division rounds correctly, so each entry equals float(Fraction(num, den)).
    return np.array([int(x) / denominator for x in numerators], dtype=float)


def _check_range(f) -> None:
    if not getattr(f, "declared_range", False):
        raise RangeError("censored estimators need f declared with range [0,1]")


def _records(p, pts, threshold=None, accepted=None, value=None, noise=None) -> list[list[DrawRecord]]:
    def at(col, r, j, cast):
        return None if col is None else cast(col[r, j])

    return [
        [DrawRecord(int(p.draw_strata[j]), j + 1, tuple(float(x) for x in pts[r, j]),
                    threshold=at(threshold, r, j, float), noise=at(noise, r, j, float),
                    value=at(value, r, j, float), accepted=at(accepted, r, j, bool))
         for j in range(p.n)]
        for r in range(pts.shape[0])
    ]


def estimate_batch(kind: str, f, p: Partition, base=None, noise: NoiseSpec | None = None,
                   rng=None, size: int = 1, records: list | None = None) -> np.ndarray:
    """``size`` independent realisations of one estimator, drawn from a single stream.

    Draw order: box selectors, positions, then thresholds (censored kinds)
    or noise (noisy kind), each as a (size, n) array. When ``records`` is a
    list it is extended with one list of DrawRecord per realisation.
    """
    if kind not in KINDS:
        raise StratError(f"unknown estimator kind {kind!r}")
    if kind in ("CSUP", "CINT"):
        _check_range(f)
    rng = rng if rng is not None else np.random.default_rng()
    n = p.n
    pts = sample_points(p, base, rng, size)
    vals, scaled = _observe(f, pts)
    if kind in ("CSUP", "CINT"):
        t = rng.random((size, n))
        accepted = t <= vals
        if records is not None:
            records.extend(_records(p, pts, threshold=t, accepted=accepted))
        if kind == "CSUP":
            return np.where(accepted, t, 0.0).max(axis=1)
        return accepted.sum(axis=1) / n
    eps = None
    if kind == "INT_NOISY" and noise is not None and noise.kind != "none":
        eps = noise.sample(rng, (size, n))
    if records is not None:
        records.extend(_records(p, pts, value=vals, noise=eps))
    if kind == "SUP":
        return vals.max(axis=1)
    if scaled is not None:
        out = _exact_ratio(scaled.sum(axis=1), f.value_scale * n)
    else:
        out = vals.sum(axis=1) / n
    if eps is not None:
        out = out + eps.sum(axis=1) / n
    return out


def _single(kind, f, p, base, noise, rng, records) -> float:
    batch = [] if records is not None else None
    value = float(estimate_batch(kind, f, p, base, noise, rng, 1, batch)[0])
    if records is not None:
        records.extend(batch[0])
    return value


def estimate_sup(f, p: Partition, base=None, rng=None, records=None) -> float:
    """max over all draws of f(V_j)."""
    return _single("SUP", f, p, base, None, rng, records)


def estimate_sup_censored(f, p: Partition, base=None, rng=None, records=None) -> float:
    """Largest accepted threshold T_j (T_j <= f(V_j)), or 0 when none is accepted."""
    return _single("CSUP", f, p, base, None, rng, records)


def estimate_integral(f, p: Partition, base=None, noise: NoiseSpec | None = None, rng=None,
                      records=None) -> float:
    """(1/n) * sum_j (f(V_j) + eps_j)."""
    kind = "INT_NOISY" if noise is not None and noise.kind != "none" else "INT"
    return _single(kind, f, p, base, noise, rng, records)


def estimate_integral_censored(f, p: Partition, base=None, rng=None, records=None) -> float:
    """Fraction of draws with T_j <= f(V_j)."""
    return _single("CINT", f, p, base, None, rng, records)


def substream(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


@dataclass
class Replication:
    kind: str
    partition_id: str
    seed: int
    n: int
    values: np.ndarray
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    records: list[list[DrawRecord]] | None = None

    @property
    def R(self) -> int:
        return len(self.values)

    @cached_property
    def sorted_values(self) -> np.ndarray:
        return np.sort(self.values)

    def ecdf(self, x) -> np.ndarray:
        """Empirical P(X <= x)."""
        return np.searchsorted(self.sorted_values, x, side="right") / self.R

    def ecdf_left(self, x) -> np.ndarray:
        return np.searchsorted(self.sorted_values, x, side="left") / self.R

    def metadata(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "n": self.n,
            "R": self.R,
            "partition_id": self.partition_id,
            "noise": self.noise.to_dict(),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replicate", "value"])
        for r, v in enumerate(self.values):
            w.writerow([r, repr(float(v))])
        return buf.getvalue()

    def write(self, directory: Path | str, stem: str) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / f"{stem}.csv"
        meta_path = directory / f"{stem}.json"
        csv_path.write_text(self.to_csv())
        meta_path.write_text(json.dumps(self.metadata(), indent=2))
        return csv_path, meta_path


BLOCK = 2048


def replicate(
    kind: str,
    f,
    p: Partition,
    base: BaseMeasure | None = None,
    noise: NoiseSpec | None = None,
    seed: int = 0,
    R: int = 1,
    keep_records: bool = False,
    workers: int = 1,
) -> Replication:
    """R realisations; block b of BLOCK replicates draws from ``substream(seed, b)``.

    The block size is fixed, so the output is identical for any ``workers``.
    """
    if R < 1:
        raise StratError("R must be at least 1")
    if kind not in KINDS:
        raise StratError(f"unknown estimator kind {kind!r}")
    noise = noise or NoiseSpec()
    values = np.empty(R)
    blocks = range((R + BLOCK - 1) // BLOCK)
    block_records: list = [None] * len(blocks)

    def run(b: int) -> None:
        lo = b * BLOCK
        size = min(BLOCK, R - lo)
        rec = [] if keep_records else None
        values[lo:lo + size] = estimate_batch(kind, f, p, base, noise, substream(seed, b), size, rec)
        block_records[b] = rec

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(run, blocks))
    else:
        for b in blocks:
            run(b)
    records = [r for blk in block_records for r in blk] if keep_records else None
    return Replication(kind, p.digest, seed, p.n, values, noise, records)
