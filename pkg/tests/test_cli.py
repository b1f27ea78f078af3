import numpy as np
import pytest

from roughavg import GridPath
from roughavg.cli import main

TINY_YAML = (
    "schema_version: 1\n"
    "scenario: sin-coupled\n"
    "t_end: 0.4\n"
    "eps_ladder: [0.5, 0.1]\n"
    "delta_ladder: [0.2, 0.1]\n"
    "seeds: {count: 2}\n"
    "estimator: {n_samples: 150}\n"
    "fast_resolution: 0.04\n"
    "drift_probes: {count: 7}\n"
)


def test_usage_errors():
    assert main(["no-such-command"]) == 1
    assert main(["lift"]) == 1  # missing required --input
    assert main(["fbm", "sample", "--steps", "not-a-number"]) == 1


def test_bad_config_exit_codes(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("scenario: [unterminated\n")
    assert main(["fastslow", "run", "--config", str(bad)]) == 2
    unknown = tmp_path / "unknown.yaml"
    unknown.write_text("schema_version: 1\nspurious_key: 1\n")
    assert main(["fastslow", "run", "--config", str(unknown)]) == 2
    wrong_schema = tmp_path / "schema.yaml"
    wrong_schema.write_text("schema_version: 99\n")
    assert main(["avg-drift", "probe", "--config", str(wrong_schema)]) == 2


def test_fbm_sample_lift_integrate_solve_roundtrip(tmp_path):
    out = str(tmp_path)
    assert main([
        "fbm", "sample", "--hurst", "0.45", "--dim", "2", "--steps", "400",
        "--dt", "0.0025", "--seed", "7", "--out", out,
    ]) == 0
    bin_file = tmp_path / "fbm_h0.45_seed7.bin"
    csv_file = tmp_path / "fbm_h0.45_seed7.csv"
    assert bin_file.exists() and csv_file.exists()
    loaded = GridPath.load(bin_file)
    assert loaded.n_steps == 400 and loaded.dim == 2

    assert main(["lift", "--input", str(bin_file), "--out", out]) == 0
    diag = (tmp_path / "lift_diagnostics.csv").read_text().strip().split("\n")
    assert diag[0] == "operation,interval,p,value,bound,pass"
    assert all(line.endswith(",1") for line in diag[1:])

    assert main(["integrate", "--input", str(bin_file), "--out", out]) == 0
    cert = (tmp_path / "integral_certificate.csv").read_text().strip().split("\n")
    assert cert[0] == "s,t,defect,bound_term,ratio"
    assert len(cert) == 4

    assert main(["solve-rde", "--input", str(bin_file), "--out", out]) == 0
    sol = np.loadtxt(tmp_path / "rde_solution.csv", delimiter=",", skiprows=1)
    assert sol.shape == (401, 2)  # t, y columns
    assert np.isfinite(sol).all()


def test_lift_rejects_garbage_input(tmp_path):
    junk = tmp_path / "junk.bin"
    junk.write_bytes(b"not a grid path at all")
    assert main(["lift", "--input", str(junk), "--out", str(tmp_path)]) == 2


def test_verify_passes():
    assert main(["verify"]) == 0


def test_fastslow_run_and_study(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(TINY_YAML)
    out = str(tmp_path / "out")
    assert main([
        "fastslow", "run", "--config", str(cfg), "--seed", "0", "--out", out,
    ]) == 0
    assert (tmp_path / "out" / "slow_seed0_eps0.1.csv").exists()
    assert (tmp_path / "out" / "fast_seed0_eps0.1.csv").exists()

    assert main([
        "study", "converge", "--config", str(cfg), "--out", out,
    ]) == 0
    for name in ("study.csv", "summary.csv", "drift_probes.csv",
                 "convergence.png", "paths_seed0.png"):
        assert (tmp_path / "out" / name).exists(), name
    lines = (tmp_path / "out" / "study.csv").read_text().strip().split("\n")
    assert len(lines) == 1 + 2 * 2  # header + seeds x eps ladder


def test_avg_drift_probe(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(TINY_YAML)
    out = str(tmp_path / "out")
    assert main(["avg-drift", "probe", "--config", str(cfg), "--out", out]) == 0
    lines = (tmp_path / "out" / "drift_probes.csv").read_text().strip().split("\n")
    assert lines[0] == "x,fbar,stderr,n_samples"
    assert len(lines) == 8
