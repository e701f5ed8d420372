import json

import pytest

from bessel_poisson_lab import lab
from bessel_poisson_lab.cli import main

SMALL = """
[experiment]
lambdas = [2.0]
functions = {functions}

[grid]
x_min = 0.01
x_max = 10.0
nx = 48
t_min = 0.01
t_max = 10.0
nt = 32

[family]
j_min = -3
j_max = 2
k_min = -3
k_max = 2
"""


def write_config(tmp_path, functions):
    p = tmp_path / "small.toml"
    p.write_text(SMALL.format(functions=json.dumps(functions)))
    return str(p)


def test_run_empty_list(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", write_config(tmp_path, []), "--out", str(out)]) == 0
    data = json.loads((out / "summary.json").read_text())
    assert data["results"] == [] and data["passed"]
    assert (out / "summary.csv").read_text().count("\n") == 1
    assert "overall: PASS" in capsys.readouterr().out


def test_run_indicator(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", write_config(tmp_path, ["chi_12"]), "--out", str(out)]) == 0
    row = json.loads((out / "summary.json").read_text())["results"][0]
    assert row["power_weight_pass"] and row["cauchy_weight_pass"]
    assert row["mu_ratio"] > 0 and row["gamma_ratio"] > 0
    assert row["gamma_le_mu"] and row["passed"]
    for name in ("summary.csv", "ratios.dat", "chi_12_lam2_mu_boxes.csv", "chi_12_lam2_u.dat", "report.txt"):
        assert (out / name).exists()


def test_run_log_growth_flagged_divergent(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", write_config(tmp_path, ["log_growth"]), "--out", str(out)]) == 0
    row = json.loads((out / "summary.json").read_text())["results"][0]
    assert row["bmo_divergent"] and row["bmo_confirmed"]
    assert row["mu_ratio"] is None


def test_run_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, ["chi_12", "lebesgue_density"])
    for name in ("a", "b"):
        assert main(["run", "--config", cfg, "--out", str(tmp_path / name)]) == 0
    for name in ("summary.csv", "ratios.dat", "chi_12_lam2_mu_boxes.csv", "chi_12_lam2_u.dat"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_report_subcommand(tmp_path, capsys):
    out = tmp_path / "out"
    main(["run", "--config", write_config(tmp_path, ["lebesgue_density"]), "--out", str(out)])
    capsys.readouterr()
    assert main(["report", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "lebesgue_density" in text and "overall: PASS" in text


def test_verify_kernels_suite(tmp_path, capsys):
    assert main(["verify", "--suite", "kernels", "--out", str(tmp_path)]) == 0
    brief = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert brief["passed"] and brief["n_failed"] == 0
    assert (tmp_path / "verify.json").exists() and (tmp_path / "verify.csv").exists()


def test_verify_geometry_writes_calibration(tmp_path):
    assert main(["verify", "--suite", "geometry", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "calibration.csv").read_text().startswith("lambda,r,N,pi_legendre,delta")


def test_verify_policy(monkeypatch):
    fake = lab.Check("demo", "always loose", 0.5, 1.0)
    monkeypatch.setitem(lab.SUITES, "kernels", (lambda: [fake],))
    monkeypatch.setattr(lab, "EXPECTED_TIGHT_FAILURES", ("always loose",))
    assert main(["verify", "--suite", "kernels"]) == 0
    assert main(["verify", "--suite", "kernels", "--tighten", "10"]) == 1
    assert main(["verify", "--suite", "kernels", "--tighten", "10", "--policy", "expected"]) == 0


def test_kernel_probe_and_meanvalue(tmp_path, capsys):
    cfg = tmp_path / "one.toml"
    cfg.write_text("[experiment]\nlambdas = [2.0]\n")
    assert main(["kernel-probe", "--config", str(cfg), "--out", str(tmp_path / "k")]) == 0
    assert (tmp_path / "k" / "kernel_bounds.csv").exists()
    assert main(["meanvalue", "--config", str(cfg), "--out", str(tmp_path / "m")]) == 0
    assert "subharmonic violations: 0 of 20" in capsys.readouterr().out
    assert (tmp_path / "m" / "mean_value.csv").exists()


def test_errors_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[experiment]\nfunctions = ['nope']\n")
    assert main(["run", "--config", str(bad)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 2
    assert main(["report", "--out", str(tmp_path / "nothing")]) == 2
    assert "bpl: error" in capsys.readouterr().err


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
