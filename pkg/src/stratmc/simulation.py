"""Config-driven Monte Carlo runs with exact-law validation.

A simulation config is JSON::

    {
      "seed": 7,
      "replications": 100000,
      "alpha": 0.01,
      "flake_budget": 0,
      "function": {"builtin": "counterexample"},
      "partitions": {"D": {"type": "coarsest", "n": 2},
                     "A": {"type": "finest", "n": 2}},
      "estimators": ["INT"],
      "noise": {"kind": "none"},
      "output_dir": "sim-out"
    }

``function`` is either ``{"builtin": "counterexample"}``,
``{"builtin": "signed_pair", "n": N}``,
``{"builtin": "constant", "value": "1/2", "d": 1, "declared_range": true}``,
or an inline step function ``{"cells": [{"box": [[lo], [hi]], "value": v}],
"declared_range": bool}``. Partitions are ``{"type": "coarsest", "n": N,
"d": D}``, ``{"type": "finest", "n": N, "cuts": [[...], ...]}`` or the
inline partition format of :mod:`stratmc.measure_space`. ``noise`` is
``{"kind": "none" | "gaussian" | "two_point", "param": p}`` where ``p`` is
the gaussian variance or the two-point half-width.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .discrete import DiscreteDist
from .errors import StratError
from .estimators import KINDS, replicate
from .exact_dist import cdf_sup_censored, dist_integral, dist_integral_censored, dist_sup, variance_integral_noisy
from .function_model import (
    NoiseSpec,
    PiecewiseConstantFn,
    ess_sup,
    function_from_dict,
    global_mean,
)
from .measure_space import (
    BaseMeasure,
    Partition,
    coarsest_partition,
    finest_partition,
    fraction_str,
    partition_from_dict,
)
from .orders import dkw_band, dkw_validate
from .plotting import cdf_table, plot_cdf_comparison
from .verification import counterexample_function, signed_pair_function


@dataclass
class ExperimentConfig:
    mode: str
    seed: int | None = None
    claim: str | None = None
    trials: int = 1
    d: int = 1
    max_n: int | None = None
    max_values: int | None = None
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    output_dir: str | None = None
    replications: int = 1000
    alpha: float = 0.01
    flake_budget: int = 0
    function: dict | None = None
    partitions: dict = field(default_factory=dict)
    estimators: list[str] = field(default_factory=lambda: ["INT"])
    workers: int = 1

    def __post_init__(self):
        if self.mode not in ("reproduce", "verify", "simulate"):
            raise StratError(f"unknown mode {self.mode!r}")
        if self.mode != "reproduce" and self.seed is None:
            raise StratError(f"a seed is required in {self.mode} mode")
        if self.trials < 1:
            raise StratError("trials must be at least 1")
        if self.mode == "simulate":
            if self.replications < 1:
                raise StratError("replications must be at least 1")
            bad = [k for k in self.estimators if k not in KINDS]
            if bad:
                raise StratError(f"unknown estimators {bad}")
            if not self.partitions:
                raise StratError("simulate needs at least one partition")
            if not 0 < self.alpha < 1:
                raise StratError("alpha must lie strictly between 0 and 1")
            if self.flake_budget < 0:
                raise StratError("flake_budget must be non-negative")

    @classmethod
    def from_dict(cls, data: dict, mode: str = "simulate") -> ExperimentConfig:
        data = dict(data)
        data.setdefault("mode", mode)
        data["noise"] = NoiseSpec.from_dict(data.get("noise"))
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise StratError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: Path | str) -> ExperimentConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_function(desc: dict | None) -> PiecewiseConstantFn:
    desc = desc or {"builtin": "counterexample"}
    builtin = desc.get("builtin")
    if builtin == "counterexample":
        return counterexample_function()
    if builtin == "signed_pair":
        return signed_pair_function(int(desc["n"]))
    if builtin == "constant":
        return PiecewiseConstantFn.constant(
            desc.get("value", 0), desc.get("d", 1), bool(desc.get("declared_range", False))
        )
    if builtin is not None:
        raise StratError(f"unknown builtin function {builtin!r}")
    return function_from_dict(desc)


def build_partition(desc: dict, d: int) -> Partition:
    kind = desc.get("type")
    if kind == "coarsest":
        return coarsest_partition(int(desc["n"]), BaseMeasure(int(desc.get("d", d))))
    if kind == "finest":
        cuts = desc.get("cuts")
        dim = len(cuts) if cuts else int(desc.get("d", d))
        return finest_partition(int(desc["n"]), BaseMeasure(dim), cuts)
    return partition_from_dict(desc)


def exact_law(kind: str, f: PiecewiseConstantFn, p: Partition, noise: NoiseSpec):
    """Exact law of the estimator when one is available, else None."""
    if kind == "SUP":
        return dist_sup(f, p)
    if kind == "CSUP":
        return cdf_sup_censored(f, p)
    if kind == "INT" or (kind == "INT_NOISY" and noise.kind == "none"):
        return dist_integral(f, p)
    if kind == "CINT":
        return dist_integral_censored(f, p)
    return None


def _summary(kind, rep, f, p, noise, exact) -> dict:
    target = ess_sup(f) if kind in ("SUP", "CSUP") else global_mean(f)
    vals = rep.values
    err = vals - float(target)
    out = {
        **rep.metadata(),
        "target": fraction_str(target),
        "empirical_mean": float(vals.mean()),
        "empirical_variance": float(vals.var(ddof=1)) if rep.R > 1 else 0.0,
        "l1_loss": float(abs(err).mean()),
        "l2_loss": float((err**2).mean()),
    }
    if isinstance(exact, DiscreteDist):
        out["exact_mean"] = fraction_str(exact.mean)
        out["exact_variance"] = fraction_str(exact.variance)
        out["exact_l1_loss"] = float(exact.expect(lambda v: abs(v - target)))
    if kind.startswith("INT"):
        out["exact_variance"] = fraction_str(variance_integral_noisy(f, p, noise=noise))
    return out


def run_simulation(cfg: ExperimentConfig, out_dir: Path | str | None = None,
                   emit_plot_data: bool = False, figures: bool = True) -> dict:
    """Replicate each (estimator, partition) pair, write outputs, and validate against exact laws."""
    out = Path(out_dir or cfg.output_dir or "sim-out")
    out.mkdir(parents=True, exist_ok=True)
    f = build_function(cfg.function)
    partitions = {label: build_partition(desc, f.dimension) for label, desc in cfg.partitions.items()}
    results, dkw_failures = [], 0
    start = time.perf_counter()
    for kind in cfg.estimators:
        for label, p in partitions.items():
            rep = replicate(kind, f, p, noise=cfg.noise, seed=cfg.seed, R=cfg.replications,
                            workers=cfg.workers)
            stem = f"{kind}_{label}"
            rep.write(out, stem)
            exact = exact_law(kind, f, p, cfg.noise)
            row = _summary(kind, rep, f, p, cfg.noise, exact)
            row["partition"] = label
            if exact is not None and rep.R >= 30:
                res = dkw_validate(rep, exact, cfg.alpha)
                row["dkw"] = {"discrepancy": res.discrepancy, "band": dkw_band(rep.R, cfg.alpha),
                              "passed": res.passed}
                dkw_failures += not res.passed
            if emit_plot_data:
                with open(out / f"{stem}_cdf.csv", "w", newline="") as fh:
                    w = csv.writer(fh)
                    w.writerow(["t", "empirical_cdf", "exact_cdf"])
                    for t, e, x in cdf_table(rep, exact):
                        w.writerow([repr(t), repr(e), "" if x is None else repr(x)])
            if figures:
                plot_cdf_comparison(rep, exact, out / f"{stem}.png", title=f"{kind}, partition {label}")
            results.append(row)
    summary = {
        "seed": cfg.seed,
        "replications": cfg.replications,
        "alpha": cfg.alpha,
        "flake_budget": cfg.flake_budget,
        "dkw_failures": dkw_failures,
        "ok": dkw_failures <= cfg.flake_budget,
        "results": results,
        "seconds": round(time.perf_counter() - start, 3),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return summary
