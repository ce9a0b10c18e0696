import json

import numpy as np
import pytest
from click.testing import CliRunner

from sparsefit import cli, glm, lla
from sparsefit.exceptions import NonConvergence
from sparsefit.lla import FitResult


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def toy_csv(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((50, 3))
    y = X @ np.array([2.0, 0.0, -1.0]) + 0.1 * rng.standard_normal(50)
    path = tmp_path / "toy.csv"
    rows = ["x1,x2,y,x3"]
    for i in range(50):
        rows.append(f"{X[i,0]},{X[i,1]},{y[i]},{X[i,2]}")
    path.write_text("\n".join(rows) + "\n")
    return path, X, y


@pytest.fixture
def strong_csv(tmp_path):
    rng = np.random.default_rng(1)
    x = rng.standard_normal(100)
    y = 5.0 * x + 0.5 * rng.standard_normal(100)
    path = tmp_path / "strong.csv"
    path.write_text("x,y\n" + "\n".join(f"{a},{b}" for a, b in zip(x, y)) + "\n")
    return path


class TestFit:
    def test_lambda_zero_matches_ols(self, runner, toy_csv):
        path, X, y = toy_csv
        res = runner.invoke(
            cli.main,
            ["fit", "--data", str(path), "--response", "y", "--family", "gaussian",
             "--method", "one-step", "--penalty", "scad:lambda=0,a=3.7"],
        )
        assert res.exit_code == 0, res.output
        doc = json.loads(res.output)
        assert doc["schema"] == "sparsefit/1"
        ols = np.linalg.lstsq(X, y, rcond=None)[0]
        assert np.allclose(doc["coefficients"], ols, atol=1e-8)
        assert doc["converged"] is True
        assert doc["feature_names"] == ["x1", "x2", "x3"]

    def test_subset_bic_strong_signal(self, runner, strong_csv):
        res = runner.invoke(
            cli.main,
            ["fit", "--data", str(strong_csv), "--response", "y",
             "--method", "subset", "--criterion", "bic"],
        )
        assert res.exit_code == 0, res.output
        doc = json.loads(res.output)
        assert doc["support"] == [0]
        assert doc["method"] == "subset"

    def test_missing_response_is_exit_3(self, runner, toy_csv):
        path, _, _ = toy_csv
        res = runner.invoke(
            cli.main,
            ["fit", "--data", str(path), "--response", "zz",
             "--method", "one-step", "--penalty", "l1:lambda=1"],
        )
        assert res.exit_code == 3
        assert "zz" in res.output

    def test_bad_penalty_is_exit_2(self, runner, toy_csv):
        path, _, _ = toy_csv
        res = runner.invoke(
            cli.main,
            ["fit", "--data", str(path), "--response", "y",
             "--method", "one-step", "--penalty", "ridge:lambda=1"],
        )
        assert res.exit_code == 2

    def test_lambda_and_cv_conflict(self, runner, toy_csv):
        path, _, _ = toy_csv
        res = runner.invoke(
            cli.main,
            ["fit", "--data", str(path), "--response", "y", "--method", "one-step",
             "--penalty", "l1:lambda=1", "--lambda", "0.5", "--cv"],
        )
        assert res.exit_code == 2

    def test_cv_fit_runs(self, runner, toy_csv):
        path, _, _ = toy_csv
        res = runner.invoke(
            cli.main,
            ["fit", "--data", str(path), "--response", "y", "--method", "one-step",
             "--penalty", "scad:lambda=1", "--cv", "--seed", "4"],
        )
        assert res.exit_code == 0, res.output
        doc = json.loads(res.output)
        assert doc["lambda"] > 0
        assert 2 in doc["support"] or doc["support"] == [0, 2]

    def test_nonconvergence_exit_4_with_partial(self, runner, toy_csv, monkeypatch):
        path, _, _ = toy_csv
        partial = FitResult(np.zeros(3), (), 1.0, "one_step", (), 1, None, False)

        def explode(*a, **k):
            raise NonConvergence("stalled", result=partial)

        monkeypatch.setattr(cli.lla, "one_step", explode)
        out = path.parent / "partial.json"
        res = runner.invoke(
            cli.main,
            ["fit", "--data", str(path), "--response", "y", "--method", "one-step",
             "--penalty", "l1:lambda=1", "--out", str(out)],
        )
        assert res.exit_code == 4
        doc = json.loads(out.read_text())
        assert doc["converged"] is False

    def test_out_file_written_17g(self, runner, toy_csv, tmp_path):
        path, _, _ = toy_csv
        out = tmp_path / "fit.json"
        res = runner.invoke(
            cli.main,
            ["fit", "--data", str(path), "--response", "y", "--method", "one-step",
             "--penalty", "l1:lambda=0.25", "--out", str(out)],
        )
        assert res.exit_code == 0
        doc = json.loads(out.read_text())
        reparsed = json.loads(out.read_text())
        assert doc == reparsed  # round-trip stable


class TestPath:
    def test_profile_endpoints(self, runner, toy_csv):
        path, X, y = toy_csv
        res = runner.invoke(
            cli.main,
            ["path", "--data", str(path), "--response", "y",
             "--penalty", "scad:lambda=1", "--n-lambda", "25", "--min-ratio", "1e-5"],
        )
        assert res.exit_code == 0, res.output
        lines = res.output.strip().splitlines()
        header = lines[0].split(",")
        assert header[0] == "lambda"
        first = np.array([float(v) for v in lines[1].split(",")])
        last = np.array([float(v) for v in lines[-1].split(",")])
        assert np.all(first[1:] == 0.0)
        ols = np.linalg.lstsq(X, y, rcond=None)[0]
        assert np.max(np.abs(last[1:] - ols)) < 1e-4

    def test_scad_rows_satisfy_kkt(self, runner, toy_csv):
        from sparsefit import penalty as pen_mod
        from sparsefit import wlasso
        from sparsefit.penalty import PenaltySpec

        path, X, y = toy_csv
        res = runner.invoke(
            cli.main,
            ["path", "--data", str(path), "--response", "y",
             "--penalty", "scad:lambda=1", "--n-lambda", "10"],
        )
        assert res.exit_code == 0
        d = glm.Dataset(X, y, "gaussian")
        b0 = glm.fit_mle(d)
        for line in res.output.strip().splitlines()[1:]:
            vals = np.array([float(v) for v in line.split(",")])
            lam, beta = vals[0], vals[1:]
            spec = PenaltySpec("scad", lam)
            w = np.array([d.n * pen_mod.derivative(spec, abs(t)) for t in b0])
            prob = wlasso.WlassoProblem(X, X @ b0, w)
            assert wlasso.certify_kkt(prob, beta) <= 1e-6


class TestCv:
    def test_single_point_grid_reported(self, runner, toy_csv):
        path, X, y = toy_csv
        res = runner.invoke(
            cli.main,
            ["cv", "--data", str(path), "--response", "y",
             "--penalty", "scad:lambda=1", "--n-lambda", "1", "--seed", "3"],
        )
        assert res.exit_code == 0, res.output
        lines = res.output.strip().splitlines()
        lam_star = float(lines[0].split("=")[1])
        assert lines[1] == "lambda,loss"
        assert len(lines) == 3
        d = glm.Dataset(X, y, "gaussian")
        assert lam_star == pytest.approx(lla.one_step_lambda_max(d, cli.parse_penalty("scad:lambda=1")))


class TestThresholdCmd:
    def test_one_step_scad_curve(self, runner):
        res = runner.invoke(
            cli.main,
            ["threshold", "--penalty", "scad:lambda=2,a=3.7", "--mode", "one-step",
             "--zmin", "-10", "--zmax", "10", "--step", "0.5"],
        )
        assert res.exit_code == 0, res.output
        lines = res.output.strip().splitlines()
        assert lines[0] == "# discontinuities: none"
        assert lines[1] == "z,theta"
        table = {float(l.split(",")[0]): float(l.split(",")[1]) for l in lines[2:]}
        assert table[8.0] == 8.0
        assert table[1.0] == 0.0

    def test_bad_range_exit_2(self, runner):
        res = runner.invoke(
            cli.main,
            ["threshold", "--penalty", "l1:lambda=1", "--zmin", "2", "--zmax", "1"],
        )
        assert res.exit_code == 2


class TestSimulate:
    CONFIG = """
[demo]
example = linear
n = 40
replications = 4
seed = 9
methods = one-step:scad, subset:bic
"""

    def test_byte_identical_across_runs_and_threads(self, runner, tmp_path):
        cfg = tmp_path / "demo.cfg"
        cfg.write_text(self.CONFIG)
        outs = []
        texts = []
        for i, threads in enumerate(("1", "2", "1")):
            out = tmp_path / f"rep{i}.json"
            res = runner.invoke(
                cli.main,
                ["simulate", "--config", str(cfg), "--threads", threads, "--out", str(out)],
            )
            assert res.exit_code == 0, res.output
            outs.append(out.read_bytes())
            texts.append(res.output)
        assert outs[0] == outs[1] == outs[2]
        assert texts[0] == texts[1] == texts[2]

    def test_reps_and_seed_overrides(self, runner, tmp_path):
        cfg = tmp_path / "demo.cfg"
        cfg.write_text(self.CONFIG)
        out = tmp_path / "r.json"
        res = runner.invoke(
            cli.main,
            ["simulate", "--config", str(cfg), "--reps", "2", "--seed", "1", "--out", str(out)],
        )
        assert res.exit_code == 0, res.output
        doc = json.loads(out.read_text())
        assert doc["demo"]["replications"] == 2
        assert doc["demo"]["seed"] == 1
        assert doc["demo"]["schema"] == "sparsefit/1"

    def test_missing_scenario_exit_3(self, runner, tmp_path):
        cfg = tmp_path / "demo.cfg"
        cfg.write_text(self.CONFIG)
        res = runner.invoke(cli.main, ["simulate", "--config", str(cfg), "--scenario", "nope"])
        assert res.exit_code == 3

    def test_env_threads_fallback(self, runner, tmp_path, monkeypatch):
        cfg = tmp_path / "demo.cfg"
        cfg.write_text(self.CONFIG)
        monkeypatch.setenv("SPARSEFIT_THREADS", "2")
        res = runner.invoke(cli.main, ["simulate", "--config", str(cfg), "--reps", "2"])
        assert res.exit_code == 0, res.output
