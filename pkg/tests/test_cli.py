import csv
import json

import pytest

from stratmc.cli import main
from stratmc.errors import StratError
from stratmc.simulation import ExperimentConfig


def write_config(tmp_path, **overrides):
    cfg = {
        "seed": 7,
        "replications": 2000,
        "function": {"builtin": "counterexample"},
        "partitions": {"D": {"type": "coarsest", "n": 2}, "A": {"type": "finest", "n": 2}},
        "estimators": ["INT", "SUP"],
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_reproduce_text(capsys):
    assert main(["reproduce", "--n", "1", "5"]) == 0
    out = capsys.readouterr().out
    assert "coarse_law\t2:1/16 3:1/4 4:3/8 5:1/4 6:1/16" in out
    assert "coarse_l1\t3/4" in out and "fine_l1\t1" in out
    assert "n=5\tcoarse_variance=1/25\tfine_variance=1/25" in out
    assert "n=1\tcoarse_variance=1\tfine_variance=1\tcoarse_l1=1\tfine_l1=1" in out


def test_reproduce_json_and_files(tmp_path, capsys):
    assert main(["reproduce", "--json", "--out", str(tmp_path)]) == 0
    report = json.loads(capsys.readouterr().out)
    ce = report["counterexample"]
    assert ce["fine_law"] == {"support": ["3", "5"], "probs": ["1/2", "1/2"]}
    assert ce["fine_le_cx_coarse"] == {"result": False, "witness": "4", "reason": "stop-loss"}
    assert [r["n"] for r in report["signed_pair"]] == list(range(1, 11))
    for name in ("reproduce.json", "coarse_law.csv", "fine_law.csv", "laws.png"):
        assert (tmp_path / name).stat().st_size > 0


def test_verify_passes(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["verify", "--theorem", "3.1", "--trials", "30", "--seed", "7", "--out", str(out)]) == 0
    assert "sup: 30/30 passed" in capsys.readouterr().out
    assert json.loads(out.read_text())["passed"] == 30


def test_verify_noise_variance(capsys):
    assert main(["verify", "--theorem", "4.1", "--trials", "20", "--seed", "7", "--noise-var", "1/4"]) == 0


def test_verify_injection_is_not_a_failure(capsys):
    code = main(["verify", "--theorem", "4.5", "--trials", "10", "--seed", "1", "--inject-nonmonotone"])
    out = capsys.readouterr().out
    assert code == 0
    assert "5 precondition violations" in out


def test_verify_censored_integral_includes_majorization(capsys):
    assert main(["verify", "--theorem", "4.3", "--trials", "10", "--seed", "1"]) == 0
    assert "bernoulli-majorization: 10/10 passed" in capsys.readouterr().out


def test_verify_requires_seed():
    with pytest.raises(SystemExit):
        main(["verify", "--theorem", "3.1", "--trials", "5"])


def test_verify_rejects_zero_trials(capsys):
    assert main(["verify", "--theorem", "3.1", "--trials", "0", "--seed", "1"]) == 2


def test_simulate_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["simulate", "--config", str(write_config(tmp_path)), "--out", str(out), "--emit-plot-data"])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["dkw_failures"] == 0 and summary["ok"]
    rows = {(r["kind"], r["partition"]): r for r in summary["results"]}
    assert rows[("INT", "D")]["exact_l1_loss"] == 0.75
    assert rows[("INT", "A")]["exact_variance"] == "1"
    assert rows[("SUP", "A")]["target"] == "6"
    for stem in ("INT_D", "INT_A", "SUP_D", "SUP_A"):
        for ext in (".csv", ".json", ".png", "_cdf.csv"):
            assert (out / f"{stem}{ext}").exists()
    with open(out / "INT_A_cdf.csv") as fh:
        table = list(csv.DictReader(fh))
    assert set(table[0]) == {"t", "empirical_cdf", "exact_cdf"}
    assert table[-1]["exact_cdf"] == "1.0"


def test_simulate_constant_function_has_zero_variance(tmp_path):
    path = write_config(
        tmp_path,
        function={"builtin": "constant", "value": "1/2", "declared_range": True},
        partitions={"one": {"type": "coarsest", "n": 1}},
        estimators=["INT", "CSUP"],
    )
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o"), "--no-figures"]) == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    int_row = next(r for r in summary["results"] if r["kind"] == "INT")
    assert int_row["empirical_variance"] == 0.0


def test_simulate_inline_function_and_partition(tmp_path):
    path = write_config(
        tmp_path,
        function={"cells": [{"box": [["0"], ["1/2"]], "value": "1/4"}, {"box": [["1/2"], ["1"]], "value": "3/4"}],
                  "declared_range": True},
        partitions={"P": {"d": 1, "n": 2, "strata": [{"boxes": [[["0"], ["1/2"]]], "k": 1},
                                                     {"boxes": [[["1/2"], ["1"]]], "k": 1}]}},
        estimators=["CINT", "INT_NOISY"],
        noise={"kind": "gaussian", "param": "1/4"},
    )
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o"), "--no-figures"]) == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    noisy = next(r for r in summary["results"] if r["kind"] == "INT_NOISY")
    assert "dkw" not in noisy
    assert noisy["exact_variance"] == "1/8"


def test_simulate_flags_dkw_failure_beyond_budget(tmp_path):
    # alpha near one shrinks the band below the sampling error of 200 replicates
    path = write_config(tmp_path, replications=200, alpha=0.999999, estimators=["INT"])
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o"), "--no-figures"]) == 1


def test_config_validation():
    with pytest.raises(StratError):
        ExperimentConfig(mode="simulate", seed=None, partitions={"a": {}})
    with pytest.raises(StratError):
        ExperimentConfig(mode="verify", seed=1, trials=0)
    with pytest.raises(StratError):
        ExperimentConfig.from_dict({"seed": 1, "partitions": {"a": {}}, "bogus": 1})
    with pytest.raises(StratError):
        ExperimentConfig(mode="simulate", seed=1, partitions={"a": {}}, estimators=["MEAN"])
    with pytest.raises(StratError):
        ExperimentConfig(mode="simulate", seed=1, partitions={"a": {}}, alpha=1.5)


def test_missing_config_file(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == 2
