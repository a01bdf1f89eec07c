"""CLI: dispatch, validation exit codes, determinism, round-trip."""

import json
import subprocess
import sys

import numpy as np
import pytest

from dp2.cli import main


def run_cli(*args):
    return main(list(args))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def read_csv_rows(path):
    lines = path.read_text().splitlines()
    return lines[0], [line.split(",") for line in lines[1:]]


def test_emden_touchdown_run(tmp_path, capsys):
    code = run_cli(
        "emden", "--out", str(tmp_path), "--xi", "-1", "--kappa", "0.5",
        "--a0", "1", "--a1", "0",
    )
    assert code == 0
    summary = read_json(tmp_path / "emden_summary.json")
    assert summary["fate"] == "TouchdownAt"
    assert summary["S"] == pytest.approx(8.0 / 3.0, rel=1e-4)
    header, rows = read_csv_rows(tmp_path / "emden_trajectory.csv")
    assert header == "s,a,a_dot"
    assert float(rows[-1][1]) < 1e-7  # touchdown level
    assert "TouchdownAt" in capsys.readouterr().out


def test_emden_linear_run(tmp_path):
    # kappa defaults to the canonical 1/2 and is irrelevant at xi = 0
    code = run_cli(
        "emden", "--out", str(tmp_path), "--xi", "0",
        "--a0", "1", "--a1", "1", "--s-max", "2",
    )
    assert code == 0
    summary = read_json(tmp_path / "emden_summary.json")
    assert summary["fate"] == "GlobalOnHorizon"
    _, rows = read_csv_rows(tmp_path / "emden_trajectory.csv")
    assert float(rows[-1][0]) == pytest.approx(2.0)
    assert float(rows[-1][1]) == pytest.approx(3.0, abs=1e-10)


def test_emden_validation_exit_names_key(tmp_path, capsys):
    code = run_cli(
        "emden", "--out", str(tmp_path), "--xi", "-1", "--kappa", "0.5", "--a0", "-1"
    )
    assert code == 2
    assert "a0" in capsys.readouterr().err


def test_selfsim_global_branch_monotone_origin_density(tmp_path):
    code = run_cli(
        "selfsim", "--out", str(tmp_path), "--k3", "1", "--xi", "1",
        "--times", "0,0.2,0.5,1.0",
    )
    assert code == 0
    summary = read_json(tmp_path / "selfsim_summary.json")
    rho0 = []
    for idx in range(4):
        _, rows = read_csv_rows(tmp_path / f"selfsim_snapshot_{idx}.csv")
        xs = np.array([float(r[0]) for r in rows])
        rho = np.array([float(r[1]) for r in rows])
        rho0.append(rho[np.argmin(np.abs(xs))])
    assert all(b < a for a, b in zip(rho0, rho0[1:]))
    assert len(summary["snapshots"]) == 4


def test_selfsim_blowup_branch_reports_collapse_time(tmp_path, capsys):
    code = run_cli(
        "selfsim", "--out", str(tmp_path), "--k3", "-1", "--xi", "-1",
        "--times", "0,0.5,0.7",  # 0.7 is past T = (8/3)/4
    )
    assert code == 2
    assert "0.666666" in capsys.readouterr().err


def test_selfsim_rejects_mismatched_signs(tmp_path, capsys):
    code = run_cli(
        "selfsim", "--out", str(tmp_path), "--k3", "1", "--xi", "-1", "--times", "0"
    )
    assert code == 2
    assert "beta" in capsys.readouterr().err


def test_verify_passes_on_exact_solution(tmp_path, capsys):
    code = run_cli(
        "verify", "--out", str(tmp_path), "--n-base", "128", "--levels", "3"
    )
    assert code == 0
    report = read_json(tmp_path / "verify_report.json")
    assert 1.7 <= report["order_estimate_mass"] <= 2.3
    assert 1.7 <= report["order_estimate_momentum"] <= 2.3
    assert "order_mass" in capsys.readouterr().out
    header, rows = read_csv_rows(tmp_path / "verify_residuals.csv")
    assert header == "x,R1,R2"
    assert len(rows) == 128 * 4


def test_verify_fails_when_boundary_included(tmp_path):
    code = run_cli(
        "verify", "--out", str(tmp_path), "--n-base", "128", "--levels", "3",
        "--delta-in-h", "0",
    )
    assert code == 1


def test_riccati_prints_bound(tmp_path, capsys):
    code = run_cli("riccati", "--out", str(tmp_path), "--m", "0", "--v0", "-2")
    assert code == 0
    assert "T = 0.5" in capsys.readouterr().out
    summary = read_json(tmp_path / "riccati_summary.json")
    assert summary["applies"] is True
    assert summary["T_bound"] == pytest.approx(0.5)
    header, rows = read_csv_rows(tmp_path / "riccati_trajectory.csv")
    assert header == "t,v"
    assert float(rows[-1][1]) < -1e6


def test_riccati_inconclusive(tmp_path, capsys):
    code = run_cli("riccati", "--out", str(tmp_path), "--m", "2", "--v0", "-1")
    assert code == 0
    assert "inconclusive" in capsys.readouterr().out
    assert read_json(tmp_path / "riccati_summary.json")["T_bound"] is None


def test_solve_short_run(tmp_path):
    code = run_cli(
        "solve", "--out", str(tmp_path), "--n", "256", "--t-max", "0.02",
        "--snapshot-times", "0.01",
    )
    assert code == 0
    summary = read_json(tmp_path / "solve_summary.json")
    assert summary["blowup_detected"] is False
    assert summary["bound"] == pytest.approx(0.2)
    header, _ = read_csv_rows(tmp_path / "solve_diagnostics.csv")
    assert header == "t,min_ux,max_rho"
    assert (tmp_path / "solve_snapshot_0.csv").exists()


def test_sweep_emits_grid_rows(tmp_path, capsys):
    code = run_cli(
        "sweep", "--out", str(tmp_path),
        "--grid", "xi=-2:-0.5:4", "kappa=0.25:1:4",
    )
    assert code == 0
    header, rows = read_csv_rows(tmp_path / "sweep.csv")
    assert len(rows) == 16
    assert all(row[6] == "TouchdownAt" for row in rows)


def test_sweep_rejects_unknown_axis(tmp_path, capsys):
    code = run_cli("sweep", "--out", str(tmp_path), "--grid", "bogus=0:1:2")
    assert code == 2
    assert "bogus" in capsys.readouterr().err


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("xi = -1\nkappa = 0.5\nnonsense = 3\n")
    code = run_cli("emden", "--out", str(tmp_path), "--config", str(cfg))
    assert code == 2
    assert "nonsense" in capsys.readouterr().err


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("xi = -1\nkappa = 0.5\na1 = 0  # comment\n")
    out = tmp_path / "run"
    code = run_cli("emden", "--out", str(out), "--config", str(cfg), "--xi", "0")
    assert code == 0
    assert read_json(out / "emden_summary.json")["fate"] == "GlobalOnHorizon"


def test_determinism_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert run_cli(
            "emden", "--out", str(out), "--seed", "7",
            "--xi", "-1", "--kappa", "0.5",
        ) == 0
    for name in ("emden_trajectory.csv", "emden_summary.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_round_trip_config_reproduces_run(tmp_path):
    out1 = tmp_path / "a"
    assert run_cli(
        "emden", "--out", str(out1), "--xi", "-1.3", "--kappa", "0.7",
        "--a1", "0.2", "--s-max", "12",
    ) == 0
    echo = read_json(out1 / "emden_summary.json")["config"]
    cfg = tmp_path / "replay.cfg"
    cfg.write_text(
        "".join(
            f"{k} = {v!r}\n" for k, v in echo.items() if k not in ("command", "seed")
        ).replace("'", "")
    )
    out2 = tmp_path / "b"
    assert run_cli("emden", "--out", str(out2), "--config", str(cfg)) == 0
    assert (out1 / "emden_trajectory.csv").read_bytes() == (
        out2 / "emden_trajectory.csv"
    ).read_bytes()


def test_format_flag_selects_artifacts(tmp_path):
    out = tmp_path / "csv_only"
    run_cli("emden", "--out", str(out), "--format", "csv", "--xi", "-1", "--kappa", "0.5")
    assert (out / "emden_trajectory.csv").exists()
    assert not (out / "emden_summary.json").exists()
    out = tmp_path / "json_only"
    run_cli("emden", "--out", str(out), "--format", "json", "--xi", "-1", "--kappa", "0.5")
    assert not (out / "emden_trajectory.csv").exists()
    assert (out / "emden_summary.json").exists()


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "dp2.cli", "riccati", "--out", str(tmp_path),
         "--m", "0", "--v0", "-2"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "T = 0.5" in proc.stdout
