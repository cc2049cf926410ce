import json
from dataclasses import replace

import numpy as np
import pytest

from lindkoop import pipeline as pl
from lindkoop.cli import build_report, main
from lindkoop.config import load_config
from lindkoop.koopman import KoopmanEstimator, read_estimator, write_estimator
from lindkoop.lindblad import read_trajectory, total_sz_op
from lindkoop.operators import to_pauli_coeffs

SMALL = ["--set", "N=3", "--set", "initial_label=d,u,u", "--set", "steps=40", "--set", "rank=6",
         "--set", "observables=polarization:1,current:2"]


def run(cmd, out, *extra):
    return main([cmd, "--output-dir", str(out), *SMALL, *extra])


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("small")
    for cmd in ("simulate", "fit", "forecast", "modes", "symmetry"):
        assert run(cmd, out) == 0
    return out


def test_pipeline_writes_artifacts(small_run):
    for name in (pl.TRAJECTORY_FILE, pl.ESTIMATOR_FILE, pl.FORECAST_FILE, pl.MODES_FILE, pl.SYMMETRY_FILE):
        assert (small_run / name).stat().st_size > 0
    traj = read_trajectory(small_run / pl.TRAJECTORY_FILE)
    assert traj.states.shape == (40, 64)
    assert read_estimator(small_run / pl.ESTIMATOR_FILE).rank == 6


def test_forecast_csv(small_run):
    rows = pl.parse_forecast_csv((small_run / pl.FORECAST_FILE).read_text())
    assert len(rows) == 41 * 2
    assert rows[0][:2] == (0.0, "polarization_1")
    assert rows[1][1] == "current_2"
    t0 = [r for r in rows if r[0] == 0.0]
    assert all(r[2] == r[3] for r in t0)
    assert rows[0][2] == pytest.approx(-0.5)  # site 1 starts down


def test_forecast_csv_round_trip():
    s = pl.ForecastSeries("x", np.array([0.0, 0.5]), np.array([1 / 3, 2e-17]), np.array([0.1, -1.0]), 1)
    rows = pl.parse_forecast_csv(pl.render_forecast_csv([s]))
    assert rows == [(0.0, "x", pytest.approx(1 / 3, rel=1e-14), 0.1), (0.5, "x", 2e-17, -1.0)]


def test_modes_csv(small_run):
    rows = pl.parse_modes_csv((small_run / pl.MODES_FILE).read_text())
    assert [r["index"] for r in rows] == list(range(1, 7))
    for r in rows:
        assert r["abs_lambda"] == pytest.approx(abs(complex(r["re_lambda"], r["im_lambda"])), rel=1e-12)
    assert all(a["abs_lambda"] >= b["abs_lambda"] - 1e-12 for a, b in zip(rows, rows[1:]))


def test_symmetry_json(small_run):
    rep = json.loads((small_run / pl.SYMMETRY_FILE).read_text())
    assert rep["test_drift_relative"] >= 0
    assert rep["commutator_residual_sz_total"] >= 0


def test_report_small(small_run, capsys):
    assert run("report", small_run) == 0
    out = capsys.readouterr().out
    assert "[PASS] 12" in out
    rep = json.loads((small_run / pl.REPORT_FILE).read_text())
    assert len(rep["criteria"]) == 12
    assert rep["config"]["N"] == 3


def test_lower_rank_fits_worse(small_run):
    cfg = load_config(None, SMALL[1::2])
    traj = read_trajectory(small_run / pl.TRAJECTORY_FILE)
    r1 = pl.run_fit(traj, replace(cfg, rank=1))
    r6 = pl.run_fit(traj, cfg)
    assert r1.training_residual > r6.training_residual


def test_default_fit_residual_ordering(default_traj, default_config, default_fit):
    stiff = pl.run_fit(default_traj, replace(default_config, reg=1e-2))
    low = pl.run_fit(default_traj, replace(default_config, rank=1))
    assert stiff.training_residual > default_fit.training_residual
    assert low.training_residual > default_fit.training_residual


def test_injected_symmetric_steady_mode(tmp_path, capsys):
    # rank-1 estimator whose only eigenfunction is total S^z
    s = to_pauli_coeffs(total_sz_op(3)).real
    T = 0.99 * np.outer(s, s) / (s @ s)
    write_estimator(KoopmanEstimator(T, 1, 1e-6, 0.5), tmp_path / "est.txt")
    assert run("symmetry", tmp_path, "--estimator", str(tmp_path / "est.txt")) == 0
    rep = json.loads((tmp_path / pl.SYMMETRY_FILE).read_text())
    assert rep["commutator_residual_sz_total"] == 0.0
    assert rep["steady_abs_lambda"] == pytest.approx(0.99)
    assert "test_drift_relative" not in rep  # no trajectory in tmp_path


class TestExitCodes:
    def test_usage(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1

    def test_config_error(self, tmp_path, capsys):
        assert main(["simulate", "--output-dir", str(tmp_path), "--set", "bogus=1"]) == 1
        assert "bogus" in capsys.readouterr().err

    def test_rank_too_large(self, small_run, capsys):
        assert run("fit", small_run, "--set", "rank=65", "--estimator", str(small_run / "x.txt")) == 1

    def test_invariant_violation(self, tmp_path, capsys):
        code = main(["simulate", "--output-dir", str(tmp_path), "--set", "N=2", "--set", "initial_label=d,u",
                     "--set", "observables=current:1", "--set", "dt=20", "--set", "substeps=1",
                     "--set", "steps=5"])
        assert code == 2
        assert "snapshot 1" in capsys.readouterr().err

    def test_defective_estimator(self, tmp_path, capsys):
        T = np.zeros((64, 64))
        T[:2, :2] = [[0.9, 1.0], [0.0, 0.9]]
        write_estimator(KoopmanEstimator(T, 2, 1e-6, 0.5), tmp_path / pl.ESTIMATOR_FILE)
        assert run("modes", tmp_path) == 2

    def test_missing_estimator_names_fit(self, tmp_path, capsys):
        assert run("forecast", tmp_path) == 3
        err = capsys.readouterr().err
        assert "estimator" in err and "'fit'" in err and "'simulate'" in err

    def test_report_missing_artifacts(self, tmp_path, capsys):
        with pytest.raises(OSError):
            build_report(load_config(None, SMALL[1::2], output_dir=str(tmp_path)))
        assert run("report", tmp_path) == 3

    def test_corrupt_trajectory(self, tmp_path, capsys):
        (tmp_path / pl.TRAJECTORY_FILE).write_text("not a trajectory\n")
        assert run("fit", tmp_path) == 3


def test_show_config(capsys):
    assert main(["show-config", "--set", "rank=7"]) == 0
    assert "rank = 7" in capsys.readouterr().out
