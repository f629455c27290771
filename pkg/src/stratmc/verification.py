"""Counterexample reproduction and randomized sweeps of the refinement claims.

Each sweep draws instances from :mod:`stratmc.generators`, computes exact
laws, and asserts the relation claimed for refined stratification. Sweeps
are keyed by a short name; the numeric selectors accepted by the CLI map
onto them through ``CLAIM_ALIASES``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from . import enumeration
from .discrete import DiscreteDist
from .errors import GeneratorInfeasibleError
from .exact_dist import (
    cdf_sup_censored,
    dist_integral,
    dist_integral_censored,
    dist_sup,
    lp_loss,
    variance_integral_noisy,
)
from .function_model import NoiseSpec, PiecewiseConstantFn, ess_sup, is_monotone
from .generators import (
    Instance,
    random_instance,
    random_majorization_pair,
    random_split_instance,
    trial_rng,
)
from .measure_space import (
    coarsest_partition,
    finest_partition,
    fraction_str,
    is_monotone_partition,
    refinement_witness,
)
from .orders import (
    dominates_cx,
    dominates_st,
    dominates_st_cdf,
    karlin_novikoff_check,
    majorizes,
)

CLAIMS = ("sup", "censored-sup", "noisy-variance", "censored-int", "monotone-1d", "monotone-split")
CLAIM_ALIASES = {
    "3.1": "sup",
    "3.2": "censored-sup",
    "4.1": "noisy-variance",
    "4.3": "censored-int",
    "4.5": "monotone-1d",
    "4.7": "monotone-split",
}
NOISE_VARIANCES = (Fraction(0), Fraction(1, 4), Fraction(1))


# -- the three-valued counterexample -----------------------------------------

def counterexample_function() -> PiecewiseConstantFn:
    """4 on [0,1/2], 2 on (1/2,3/4], 6 on (3/4,1]."""
    return PiecewiseConstantFn.step([Fraction(1, 2), Fraction(3, 4)], [4, 2, 6])


def counterexample_partitions():
    """(coarsest, finest) for n = 2 on the unit interval."""
    return coarsest_partition(2), finest_partition(2)


def reproduce_counterexample() -> dict:
    """Exact laws and losses showing that refinement need not help in L1.

    All numbers are computed by the exact engine.
    """
    f = counterexample_function()
    coarse, fine = counterexample_partitions()
    law_c, law_f = dist_integral(f, coarse), dist_integral(f, fine)
    center = law_c.mean
    return {
        "coarse_law": law_c,
        "fine_law": law_f,
        "coarse_mean": law_c.mean,
        "fine_mean": law_f.mean,
        "coarse_variance": law_c.variance,
        "fine_variance": law_f.variance,
        "coarse_l1": lp_loss(law_c, center, 1),
        "fine_l1": lp_loss(law_f, center, 1),
        "fine_le_cx_coarse": dominates_cx(law_f, law_c),
        "coarse_le_cx_fine": dominates_cx(law_c, law_f),
    }


def signed_pair_function(n: int) -> PiecewiseConstantFn:
    """+1 on the lower half of [0,1/n], -1 on its upper half, 0 elsewhere."""
    breaks = [Fraction(1, 2 * n), Fraction(1, n)] if n > 1 else [Fraction(1, 2)]
    values = [1, -1, 0] if n > 1 else [1, -1]
    return PiecewiseConstantFn.step(breaks, values)


def reproduce_signed_pair(n: int) -> dict:
    f = signed_pair_function(n)
    coarse, fine = coarsest_partition(n), finest_partition(n)
    law_c, law_f = dist_integral(f, coarse), dist_integral(f, fine)
    l1_c, l1_f = lp_loss(law_c, 0, 1), lp_loss(law_f, 0, 1)
    return {
        "n": n,
        "coarse_law": law_c,
        "fine_law": law_f,
        "coarse_variance": law_c.variance,
        "fine_variance": law_f.variance,
        "coarse_l1": l1_c,
        "fine_l1": l1_f,
        "coarse_l1_strictly_smaller": l1_c < l1_f,
    }


# -- sweeps --------------------------------------------------------------------

@dataclass
class SweepReport:
    claim: str
    seed: int
    trials: int
    passed: int = 0
    failures: list[dict] = field(default_factory=list)
    precondition_violations: int = 0
    extra: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "claim": self.claim,
            "seed": self.seed,
            "trials": self.trials,
            "passed": self.passed,
            "failed": len(self.failures),
            "precondition_violations": self.precondition_violations,
            "failures": self.failures,
            "extra": self.extra,
            "seconds": round(self.seconds, 3),
        }


def _fail(inst: Instance, trial: int, **info) -> dict:
    out = {"trial": trial, "instance": inst.to_dict()}
    for k, v in info.items():
        out[k] = fraction_str(v) if isinstance(v, Fraction) else v
    return out


def _check_sup(inst: Instance, trial: int, ctx: dict) -> dict | None:
    lo, hi = dist_sup(inst.f, inst.coarse), dist_sup(inst.f, inst.fine)
    v = dominates_st(lo, hi)
    if not v:
        return _fail(inst, trial, witness=v.witness)
    if hi.max > ess_sup(inst.f):
        return _fail(inst, trial, reason="maximum exceeds the essential supremum")
    return None


def _check_censored_sup(inst: Instance, trial: int, ctx: dict) -> dict | None:
    m = ctx.get("grid_per_segment", 64)
    lo, hi = cdf_sup_censored(inst.f, inst.coarse), cdf_sup_censored(inst.f, inst.fine)
    v = dominates_st_cdf(lo, hi, m)
    if inst.fine.n <= ctx.get("oracle_max_n", 3):
        ctx["oracle_checked"] = ctx.get("oracle_checked", 0) + 1
        grid = lo.evaluation_grid(m)
        po_lo = enumeration.censored_sup_cdf_polynomials(inst.f, inst.coarse)
        po_hi = enumeration.censored_sup_cdf_polynomials(inst.f, inst.fine)
        brute_ok = True
        for t in grid:
            a = enumeration.eval_piecewise_polynomial(po_lo, t)
            b = enumeration.eval_piecewise_polynomial(po_hi, t)
            if a != lo.cdf(t) or b != hi.cdf(t):
                return _fail(inst, trial, reason="product formula disagrees with enumeration", t=t)
            brute_ok &= a >= b
        if brute_ok != bool(v):
            return _fail(inst, trial, reason="grid verdict disagrees with enumeration")
        ctx["oracle_agreed"] = ctx.get("oracle_agreed", 0) + 1
    if not v:
        return _fail(inst, trial, witness=v.witness)
    return None


def _check_noisy_variance(inst: Instance, trial: int, ctx: dict) -> dict | None:
    sigma2 = ctx["rng"].choice(NOISE_VARIANCES) if ctx.get("variance") is None else ctx["variance"]
    noise = NoiseSpec.gaussian(sigma2)
    var_c = variance_integral_noisy(inst.f, inst.coarse, noise=noise)
    var_f = variance_integral_noisy(inst.f, inst.fine, noise=noise)
    for p, var in ((inst.coarse, var_c), (inst.fine, var_f)):
        direct = dist_integral(inst.f, p).variance + sigma2 / p.n
        if direct != var:
            return _fail(inst, trial, reason="decomposition disagrees with convolution",
                         sigma2=sigma2)
    ctx.setdefault("variances", []).append(
        {"trial": trial, "sigma2": fraction_str(sigma2),
         "coarse": fraction_str(var_c), "fine": fraction_str(var_f)}
    )
    if var_f > var_c:
        return _fail(inst, trial, sigma2=sigma2, coarse_variance=var_c, fine_variance=var_f)
    return None


def _check_censored_int(inst: Instance, trial: int, ctx: dict) -> dict | None:
    lo, hi = dist_integral_censored(inst.f, inst.fine), dist_integral_censored(inst.f, inst.coarse)
    v = dominates_cx(lo, hi)
    if not v:
        return _fail(inst, trial, witness=v.witness, reason=v.reason)
    return None


def _check_integral_cx(inst: Instance, trial: int, ctx: dict) -> dict | None:
    """Consecutive links of the chain and its two ends must all be cx-ordered."""
    chain = inst.chain or [inst.coarse, inst.fine]
    laws = [dist_integral(inst.f, p) for p in chain]
    pairs = [(k, k + 1) for k in range(len(laws) - 1)]
    if len(laws) > 2:
        pairs.append((0, len(laws) - 1))
    for i, j in pairs:
        v = dominates_cx(laws[j], laws[i])
        if not v:
            return _fail(inst, trial, link=[i, j], witness=v.witness, reason=v.reason)
    return None


def _gen_general(rng, ctx):
    return random_instance(rng, max_n=ctx.get("max_n", 6), max_values=ctx.get("max_values", 5))


def _gen_censored_sup(rng, ctx):
    return random_instance(rng, max_n=ctx.get("max_n", 5), max_values=3, max_cells=4)


def _gen_monotone_1d(rng, ctx):
    inst = random_instance(rng, max_n=ctx.get("max_n", 6), monotone=True)
    if ctx.get("inject_nonmonotone") and ctx["trial"] % 2 == 0:
        f = counterexample_function()
        coarse, fine = counterexample_partitions()
        inst = Instance(f, coarse, fine, refinement_witness(coarse, fine), [coarse, fine])
    return inst


def _gen_split(rng, ctx):
    return random_split_instance(
        rng, max_n=ctx.get("max_n", 8), max_splits=ctx.get("max_splits", 4),
        d=ctx.get("d", 2), max_cells_per_axis=ctx.get("max_cells_per_axis", 4),
    )


def _monotone_preconditions(inst: Instance) -> bool:
    if not is_monotone(inst.f):
        return False
    if inst.f.dimension == 1:
        return all(is_monotone_partition(p) for p in inst.chain or [inst.coarse, inst.fine])
    return True


_SWEEPS: dict[str, tuple[Callable, Callable]] = {
    "sup": (_gen_general, _check_sup),
    "censored-sup": (_gen_censored_sup, _check_censored_sup),
    "noisy-variance": (_gen_general, _check_noisy_variance),
    "censored-int": (_gen_general, _check_censored_int),
    "monotone-1d": (_gen_monotone_1d, _check_integral_cx),
    "monotone-split": (_gen_split, _check_integral_cx),
}


def resolve_claim(name: str) -> str:
    name = CLAIM_ALIASES.get(name, name)
    if name not in _SWEEPS:
        raise ValueError(f"unknown claim {name!r}; choose from {sorted(CLAIMS + tuple(CLAIM_ALIASES))}")
    return name


def run_sweep(claim: str, trials: int, seed: int, **options) -> SweepReport:
    """Run ``trials`` random instances of ``claim``; deterministic given (claim, seed, options).

    Instances that violate a claim's preconditions (only possible when
    ``inject_nonmonotone`` is set) are counted separately: a failed relation
    there is a precondition violation, not a counterexample.
    """
    claim = resolve_claim(claim)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    gen, check = _SWEEPS[claim]
    report = SweepReport(claim, seed, trials)
    start = time.perf_counter()
    ctx = dict(options)
    violations_failed = 0
    for trial in range(trials):
        rng = trial_rng(seed, trial)
        ctx.update(rng=rng, trial=trial)
        try:
            inst = gen(rng, ctx)
        except GeneratorInfeasibleError as exc:
            report.failures.append({"trial": trial, "reason": f"generator infeasible: {exc}"})
            continue
        result = check(inst, trial, ctx)
        if claim.startswith("monotone") and not _monotone_preconditions(inst):
            report.precondition_violations += 1
            if result is not None:
                violations_failed += 1
            continue
        if result is None:
            report.passed += 1
        else:
            report.failures.append(result)
    if claim.startswith("monotone"):
        report.extra["precondition_violations_with_failed_relation"] = violations_failed
    for key in ("oracle_checked", "oracle_agreed", "variances"):
        if key in ctx:
            report.extra[key] = ctx[key]
    report.seconds = time.perf_counter() - start
    return report


def run_majorization_sweep(trials: int, seed: int, max_n: int = 6) -> SweepReport:
    """Convex ordering of Bernoulli means for random majorization pairs."""
    report = SweepReport("bernoulli-majorization", seed, trials)
    start = time.perf_counter()
    for trial in range(trials):
        p, q = random_majorization_pair(trial_rng(seed, trial), max_n)
        if majorizes(q, p) and karlin_novikoff_check(p, q):
            report.passed += 1
        else:
            report.failures.append(
                {"trial": trial, "p": [fraction_str(x) for x in p], "q": [fraction_str(x) for x in q]}
            )
    report.seconds = time.perf_counter() - start
    return report


def law_summary(law: DiscreteDist) -> dict:
    return {
        "support": [fraction_str(v) for v in law.support],
        "probs": [fraction_str(p) for p in law.probs],
    }


__all__ = [
    "CLAIMS",
    "CLAIM_ALIASES",
    "SweepReport",
    "counterexample_function",
    "counterexample_partitions",
    "law_summary",
    "reproduce_counterexample",
    "reproduce_signed_pair",
    "resolve_claim",
    "run_majorization_sweep",
    "run_sweep",
    "signed_pair_function",
]
