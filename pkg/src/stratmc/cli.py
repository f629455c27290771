"""Command line entry point: ``stratmc reproduce | verify | simulate``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from .discrete import DiscreteDist
from .errors import StratError
from .measure_space import as_fraction, fraction_str
from .orders import OrderVerdict
from .simulation import ExperimentConfig, run_simulation
from .verification import (
    CLAIM_ALIASES,
    CLAIMS,
    law_summary,
    reproduce_counterexample,
    reproduce_signed_pair,
    run_majorization_sweep,
    run_sweep,
)


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return fraction_str(obj)
    if isinstance(obj, DiscreteDist):
        return law_summary(obj)
    if isinstance(obj, OrderVerdict):
        return {"result": obj.result,
                "witness": None if obj.witness is None else fraction_str(obj.witness),
                "reason": obj.reason}
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _fmt(value) -> str:
    if isinstance(value, Fraction):
        return fraction_str(value)
    if isinstance(value, DiscreteDist):
        return " ".join(f"{fraction_str(v)}:{fraction_str(p)}" for v, p in value.items())
    if isinstance(value, OrderVerdict):
        if value.result:
            return "true"
        return f"false (witness t={fraction_str(value.witness)}, {value.reason})"
    return str(value).lower() if isinstance(value, bool) else str(value)


def reproduce_report(ns: list[int]) -> dict:
    start = time.perf_counter()
    report = {"counterexample": reproduce_counterexample(),
              "signed_pair": [reproduce_signed_pair(n) for n in ns]}
    report["seconds"] = round(time.perf_counter() - start, 4)
    return report


def cmd_reproduce(args) -> int:
    report = reproduce_report(args.n)
    if args.json:
        print(json.dumps(_jsonable(report), indent=2))
    else:
        print("# three-valued step function, n = 2 (coarse = one stratum, fine = two halves)")
        for key, value in report["counterexample"].items():
            print(f"{key}\t{_fmt(value)}")
        print("# signed pair on [0, 1/n]: coarse vs finest partition, losses about 0")
        for row in report["signed_pair"]:
            n = row["n"]
            print(f"n={n}\tcoarse_variance={_fmt(row['coarse_variance'])}\t"
                  f"fine_variance={_fmt(row['fine_variance'])}\t"
                  f"coarse_l1={_fmt(row['coarse_l1'])}\tfine_l1={_fmt(row['fine_l1'])}\t"
                  f"coarse_l1_strictly_smaller={_fmt(row['coarse_l1_strictly_smaller'])}")
    if args.out:
        from .plotting import plot_laws

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "reproduce.json").write_text(json.dumps(_jsonable(report), indent=2))
        ce = report["counterexample"]
        (out / "coarse_law.csv").write_text(ce["coarse_law"].to_csv())
        (out / "fine_law.csv").write_text(ce["fine_law"].to_csv())
        plot_laws({"coarse": ce["coarse_law"], "fine": ce["fine_law"]}, out / "laws.png",
                  title="exact laws of the integral estimator, n = 2")
    return 0


def cmd_verify(args) -> int:
    cfg = ExperimentConfig(
        mode="verify", seed=args.seed, claim=args.theorem, trials=args.trials,
        d=args.d, max_n=args.max_n, output_dir=args.out,
    )
    options = {"inject_nonmonotone": args.inject_nonmonotone, "d": cfg.d}
    if cfg.max_n is not None:
        options["max_n"] = cfg.max_n
    if args.noise_var is not None:
        options["variance"] = as_fraction(args.noise_var)
    report = run_sweep(cfg.claim, cfg.trials, cfg.seed, **options)
    payload = report.to_dict()
    ok = report.ok
    if report.claim == "censored-int":
        maj = run_majorization_sweep(cfg.trials, cfg.seed)
        payload["majorization"] = maj.to_dict()
        ok &= maj.ok
    print(f"{report.claim}: {report.passed}/{report.trials} passed, {len(report.failures)} failed, "
          f"{report.precondition_violations} precondition violations ({report.seconds:.2f}s)")
    if "precondition_violations_with_failed_relation" in report.extra:
        print(f"  relation failed on {report.extra['precondition_violations_with_failed_relation']} "
              "precondition-violating instances (not counted as failures)")
    if "majorization" in payload:
        m = payload["majorization"]
        print(f"bernoulli-majorization: {m['passed']}/{m['trials']} passed")
    for fail in report.failures:
        print(json.dumps(fail))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps(payload, indent=2))
    return 0 if ok else 1


def cmd_simulate(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    summary = run_simulation(cfg, args.out, emit_plot_data=args.emit_plot_data,
                             figures=not args.no_figures)
    for row in summary["results"]:
        dkw = row.get("dkw")
        tag = "" if dkw is None else f"  dkw {dkw['discrepancy']:.4f} <= {dkw['band']:.4f}: {dkw['passed']}"
        print(f"{row['kind']:<9} {row['partition']:<8} mean {row['empirical_mean']:.6f}  "
              f"var {row['empirical_variance']:.6f}  L1 {row['l1_loss']:.6f}{tag}")
    print(f"dkw failures {summary['dkw_failures']} (budget {summary['flake_budget']})")
    return 0 if summary["ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stratmc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    rp = sub.add_parser("reproduce", help="exact laws of the refinement counterexample")
    rp.add_argument("--n", type=int, nargs="+", default=list(range(1, 11)),
                    help="sizes for the signed-pair generalization (default 1..10)")
    rp.add_argument("--json", action="store_true", help="print JSON instead of text")
    rp.add_argument("--out", help="directory for JSON, CSV laws and a figure")
    rp.set_defaults(func=cmd_reproduce)

    vp = sub.add_parser("verify", help="randomized sweep of a refinement claim on exact laws")
    vp.add_argument("--theorem", required=True, choices=sorted(CLAIMS + tuple(CLAIM_ALIASES)))
    vp.add_argument("--trials", type=int, required=True)
    vp.add_argument("--seed", type=int, required=True)
    vp.add_argument("--noise-var", help="fixed gaussian noise variance, e.g. 1/4")
    vp.add_argument("--max-n", type=int)
    vp.add_argument("--d", type=int, default=2, help="dimension for split sweeps")
    vp.add_argument("--inject-nonmonotone", action="store_true",
                    help="mix in a non-monotone instance on every other trial")
    vp.add_argument("--out", help="write the JSON report here")
    vp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("simulate", help="seeded Monte Carlo runs from a JSON config")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", help="output directory (overrides the config)")
    sp.add_argument("--emit-plot-data", action="store_true", help="write (t, CDF) tables")
    sp.add_argument("--no-figures", action="store_true")
    sp.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (StratError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
