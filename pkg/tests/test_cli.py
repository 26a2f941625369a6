"""End-to-end tests of the command-line interface (in-process via main)."""

import json
import math
import os
import subprocess
import sys

import pytest

from gapforge.cli import main
from gapforge.phase_diagram import SCAN_COLUMNS


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# solve


def test_solve_json_reports_every_branch(capsys):
    code, out, _ = run_cli(
        capsys, "solve", "--lambda-b", "5", "--mu", "1", "--temp", "0.01"
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["multiplicity"] == 2
    assert payload["region"] == "B+"
    phases = [sol["phase"] for sol in payload["solutions"]]
    assert phases == ["pure_mean_field", "mixed_lower", "mixed_upper"]
    upper = payload["solutions"][-1]
    # at T << lambda_b the top branch pins to sqrt(lambda_b^2 - mu^2)
    assert upper["delta_b"] == pytest.approx(math.sqrt(24.0), abs=1e-3)
    assert upper["checks_passed"] is True
    assert isinstance(upper["checks"], dict)


def test_solve_csv_format(capsys):
    code, out, _ = run_cli(
        capsys,
        "solve", "--lambda-b", "5", "--mu", "1", "--temp", "0.01",
        "--format", "csv",
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "phase,delta_m,delta_b,w_bar,residual,checks_passed"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[0] == "pure_mean_field"
    float(first[1]), float(first[2]), float(first[3])  # cells parse as floats


def test_solve_writes_to_file(tmp_path, capsys):
    target = tmp_path / "report.json"
    code, out, _ = run_cli(
        capsys,
        "solve", "--lambda-b", "5", "--mu", "1", "--temp", "0.01",
        "--out", str(target),
    )
    assert code == 0
    assert out == ""
    assert json.loads(target.read_text())["multiplicity"] == 2


def test_solve_beta_is_an_alias_for_temperature(capsys):
    code_t, out_t, _ = run_cli(
        capsys, "solve", "--lambda-b", "4", "--mu", "1", "--temp", "0.5"
    )
    code_b, out_b, _ = run_cli(
        capsys, "solve", "--lambda-b", "4", "--mu", "1", "--beta", "2.0"
    )
    assert code_t == code_b == 0
    assert out_t == out_b


@pytest.mark.parametrize(
    "argv",
    [
        ("solve", "--mu", "1", "--temp", "1"),  # lambda-b missing
        ("solve", "--lambda-b", "4", "--temp", "1"),  # mu missing
        ("solve", "--lambda-b", "4", "--mu", "1"),  # temperature missing
        ("solve", "--lambda-b", "4", "--mu", "-1", "--temp", "1"),
        ("solve", "--lambda-b", "4", "--mu", "1", "--temp", "1", "--beta", "1"),
        ("solve", "--lambda-b", "4", "--mu", "1", "--beta", "-2"),
    ],
)
def test_solve_rejects_bad_input(capsys, argv):
    code, _, err = run_cli(capsys, *argv)
    assert code == 2
    assert err != ""


def test_unknown_command_exits_2(capsys):
    assert run_cli(capsys, "frobnicate")[0] == 2
    assert run_cli(capsys)[0] == 2


# ---------------------------------------------------------------------------
# config files


def test_config_preloads_flags(tmp_path, capsys):
    cfg = tmp_path / "point.json"
    cfg.write_text(json.dumps({"lambda_b": 5.0, "mu": 1.0, "temp": 0.01}))
    code, out, _ = run_cli(capsys, "solve", "--config", str(cfg))
    assert code == 0
    assert json.loads(out)["multiplicity"] == 2


def test_explicit_flags_override_the_config(tmp_path, capsys):
    cfg = tmp_path / "point.json"
    cfg.write_text(json.dumps({"lambda_b": 5.0, "mu": 1.0, "temp": 0.01}))
    code, out, _ = run_cli(capsys, "solve", "--config", str(cfg), "--temp", "3.0")
    assert code == 0
    payload = json.loads(out)
    assert payload["multiplicity"] == 0  # 3.0 is above the transition
    assert [s["phase"] for s in payload["solutions"]] == ["pure_mean_field"]


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"lambda_b": 5.0, "sigma": 2.0}))
    code, _, err = run_cli(capsys, "solve", "--config", str(cfg), "--mu", "1",
                           "--temp", "1")
    assert code == 2
    assert "sigma" in err


def test_config_must_be_valid_json(tmp_path, capsys):
    cfg = tmp_path / "broken.json"
    cfg.write_text("{not json")
    code, _, err = run_cli(capsys, "solve", "--config", str(cfg))
    assert code == 2
    assert "JSON" in err


def test_config_missing_file(capsys):
    code, _, err = run_cli(capsys, "solve", "--config", "/nonexistent/cfg.json")
    assert code == 2
    assert "cannot read" in err


# ---------------------------------------------------------------------------
# scan


def test_scan_csv_lattice(capsys):
    code, out, _ = run_cli(
        capsys,
        "scan", "--lambda-b", "4", "--lambda-m", "0", "--mu", "1",
        "--range-temp", "0.5:2.5:3",
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == ",".join(SCAN_COLUMNS)
    assert len(lines) == 4
    temps = [line.split(",")[3] for line in lines[1:]]
    assert [float(t) for t in temps] == [0.5, 1.5, 2.5]


def test_scan_accepts_negative_range_endpoints(capsys):
    code, out, _ = run_cli(
        capsys,
        "scan", "--mu", "1", "--temp", "0.5",
        "--range-lambda-b", "-2:-1:2", "--range-lambda-m", "-1:0:2",
    )
    assert code == 0
    assert len(out.splitlines()) == 5


def test_scan_json_format(capsys):
    code, out, _ = run_cli(
        capsys,
        "scan", "--lambda-b", "4", "--lambda-m", "0", "--mu", "1",
        "--range-temp", "0.5:2.5:3", "--format", "json",
    )
    assert code == 0
    payload = json.loads(out)
    assert len(payload) == 3
    assert payload[0]["multiplicity"] == 2


def test_scan_equilibrium_curve(capsys):
    code, out, _ = run_cli(
        capsys, "scan", "--equilibrium", "--lambda-b-bar", "1.2:5:4"
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "lambda_b_bar,mu_e_bar,x_e"
    assert len(lines) == 5
    curve = [float(line.split(",")[1]) for line in lines[1:]]
    assert all(a < b for a, b in zip(curve, curve[1:]))


def test_scan_equilibrium_needs_its_range(capsys):
    code, _, err = run_cli(capsys, "scan", "--equilibrium")
    assert code == 2
    assert "lambda-b-bar" in err


def test_scan_needs_every_axis(capsys):
    code, _, err = run_cli(capsys, "scan", "--range-temp", "0.5:2.5:3")
    assert code == 2
    assert "lambda_b" in err


def test_scan_bad_range_syntax(capsys):
    code, _, err = run_cli(
        capsys,
        "scan", "--lambda-b", "4", "--mu", "1", "--range-temp", "0.5;2.5;3",
    )
    assert code == 2
    assert "LO:HI:STEPS" in err


def test_scan_honours_thread_env(capsys, monkeypatch):
    argv = ("scan", "--lambda-b", "4", "--lambda-m", "0", "--mu", "1",
            "--range-temp", "0.5:2.5:3")
    monkeypatch.delenv("GAPFORGE_THREADS", raising=False)
    _, serial, _ = run_cli(capsys, *argv)
    monkeypatch.setenv("GAPFORGE_THREADS", "4")
    code, threaded, _ = run_cli(capsys, *argv)
    assert code == 0
    assert threaded == serial
    monkeypatch.setenv("GAPFORGE_THREADS", "many")
    assert run_cli(capsys, *argv)[0] == 2


def test_scan_runs_are_byte_identical_across_processes(tmp_path):
    argv = [
        sys.executable, "-m", "gapforge",
        "scan", "--range-lambda-b", "-2:5:4", "--lambda-m", "-0.4",
        "--mu", "1", "--range-temp", "0.3:2:3",
    ]
    env = dict(os.environ, GAPFORGE_THREADS="4")
    first = subprocess.run(argv, capture_output=True, env=env, check=True)
    second = subprocess.run(argv, capture_output=True, env=env, check=True)
    assert first.stdout == second.stdout
    assert first.stdout.count(b"\n") == 13  # header + 12 lattice points


# ---------------------------------------------------------------------------
# verify


def test_verify_passes_in_the_deep_window(capsys):
    code, out, _ = run_cli(
        capsys,
        "verify", "--regime", "IA", "--lambda-b", "5", "--mu", "1",
        "--temp", "0.01",
    )
    assert code == 0
    assert "verify: PASS" in out


def test_verify_passes_in_the_attractive_high_t_window(capsys):
    code, out, _ = run_cli(
        capsys,
        "verify", "--regime", "IIB", "--lambda-b", "-5", "--lambda-m", "-0.9",
        "--mu", "1", "--temp", "2",
    )
    assert code == 0
    assert "verify: PASS" in out


def test_verify_rejects_an_inapplicable_regime(capsys):
    code, _, err = run_cli(
        capsys,
        "verify", "--regime", "IIA", "--lambda-b", "-2", "--lambda-m", "0.5",
        "--mu", "3", "--temp", "0.04",
    )
    assert code == 2
    assert "lambda_m < 0" in err


def test_verify_flags_a_window_violation(capsys):
    # applicable couplings, but mu < |lambda_b| leaves the expansion invalid
    code, _, err = run_cli(
        capsys,
        "verify", "--regime", "IIA", "--lambda-b", "-2", "--lambda-m", "-3",
        "--mu", "1", "--temp", "0.02",
    )
    assert code == 2
    assert "window" in err


def test_verify_reports_a_genuine_mismatch(capsys):
    # inside the linearised window but close to its edge: the closed form
    # is off by more than the regime tolerance and must say so
    code, out, _ = run_cli(
        capsys,
        "verify", "--regime", "IB", "--lambda-b", "1.5", "--mu", "1",
        "--temp", "0.02",
    )
    assert code == 3
    assert "verify: FAIL" in out
    assert "delta_b" in out


# ---------------------------------------------------------------------------
# kernel-solve


def test_kernel_solve_stdout_layout(capsys):
    code, out, err = run_cli(
        capsys,
        "kernel-solve", "--lambda-b", "4", "--mu", "1", "--temp", "0.5",
        "--epsilon", "0.05", "--grid-points", "120", "--init", "seed:1.0",
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "p,delta_m,delta_b,w_bar"
    assert len(lines) > 100
    summary = json.loads(err)
    assert summary["converged"] is True
    assert summary["branches"][0]["delta_b_at_fermi"] == pytest.approx(
        3.8516924, abs=5e-2
    )


def test_kernel_solve_out_file_splits_summary(tmp_path, capsys):
    target = tmp_path / "gaps.csv"
    code, out, _ = run_cli(
        capsys,
        "kernel-solve", "--lambda-b", "4", "--mu", "1", "--temp", "0.5",
        "--epsilon", "0.05", "--grid-points", "120", "--init", "seed:1.0",
        "--out", str(target),
    )
    assert code == 0
    summary = json.loads(out)  # summary moves to stdout when CSV goes to a file
    assert summary["converged"] is True
    lines = target.read_text().splitlines()
    assert lines[0] == "p,delta_m,delta_b,w_bar"
    assert summary["grid_points"] == len(lines) - 1


def test_kernel_solve_branch_scan_adds_a_branch_column(capsys):
    code, out, err = run_cli(
        capsys,
        "kernel-solve", "--lambda-b", "4", "--mu", "1", "--temp", "0.5",
        "--epsilon", "0.05", "--grid-points", "240", "--seeds", "0.3,2.0",
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "branch,p,delta_m,delta_b,w_bar"
    summary = json.loads(err)
    assert len(summary["branches"]) == 3
    peaks = [b["delta_b_peak"] for b in summary["branches"]]
    assert peaks == sorted(peaks)


def test_kernel_solve_reports_non_convergence(capsys):
    code, out, err = run_cli(
        capsys,
        "kernel-solve", "--lambda-b", "4", "--mu", "1", "--temp", "0.5",
        "--epsilon", "0.05", "--grid-points", "120", "--init", "seed:1.0",
        "--max-iters", "5",
    )
    assert code == 4
    assert len(out.splitlines()) > 100  # partial gaps still written
    summary = json.loads(err)
    assert summary["converged"] is False
    assert summary["branches"][0]["iterations"] == 5


def test_kernel_solve_tabulated_kernel_roundtrip(tmp_path, capsys):
    import numpy as np

    from gapforge.kernel_solver import shell_aligned_grid, shell_kernel

    eps = 0.05
    grid = shell_aligned_grid(1.0, eps, n_shell=40, p_max=3.0, n_outer=80)
    shape = shell_kernel(eps, 1.0)
    values = shape(grid.points)
    matrix = 4.0 * 2.0 * eps * np.outer(values, values)
    path = tmp_path / "vb.csv"
    with open(path, "w") as fh:
        fh.write(",".join(repr(float(p)) for p in grid.points) + "\n")
        for row in matrix:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    code, out, err = run_cli(
        capsys,
        "kernel-solve", "--lambda-b", "4", "--mu", "1", "--temp", "0.5",
        "--kernel-b-csv", str(path), "--init", "seed:1.0",
    )
    assert code == 0
    summary = json.loads(err)
    assert summary["converged"] is True
    assert summary["grid_points"] == grid.points.size
    assert summary["branches"][0]["delta_b_peak"] > 1.0


def test_kernel_solve_rejects_malformed_kernel_csv(tmp_path, capsys):
    path = tmp_path / "vb.csv"
    path.write_text("0.0,1.0\n1,2\n3\n")
    code, _, err = run_cli(
        capsys,
        "kernel-solve", "--lambda-b", "4", "--mu", "1", "--temp", "0.5",
        "--kernel-b-csv", str(path),
    )
    assert code == 2
    assert "line 3" in err


@pytest.mark.parametrize(
    "extra",
    [
        (),  # neither epsilon nor kernel CSV
        ("--epsilon", "0.05", "--init", "seed:oops"),
        ("--epsilon", "0.05", "--init", "warm"),
        ("--epsilon", "0.05", "--seeds", "a,b"),
        ("--epsilon", "0.05", "--damping", "0"),
        ("--epsilon", "-0.1",),
    ],
)
def test_kernel_solve_rejects_bad_setup(capsys, extra):
    code, _, err = run_cli(
        capsys,
        "kernel-solve", "--lambda-b", "4", "--mu", "1", "--temp", "0.5",
        *extra,
    )
    assert code == 2
    assert err != ""
