import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from tailhawkes.cli import main
from tailhawkes.service import schemas as s

from .conftest import FIXTURES

FIXTURE_CSV = str(FIXTURES / "returns_small.csv")


@pytest.fixture()
def runner():
    return CliRunner()


def run_ok(runner, args, env=None):
    result = runner.invoke(main, args, env=env, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


FIT_ARGS = ["fit", "--input", FIXTURE_CSV, "--train-end", "150", "--quantile", "0.1",
            "--seed", "3", "--restarts", "1"]


@pytest.fixture(scope="module")
def fit_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("fit_run")
    result = CliRunner().invoke(main, FIT_ARGS + ["--out", str(out)],
                                catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return out


class TestFitCommand:
    def test_four_fit_files_and_comparison(self, fit_run):
        for kind in ("bivariate", "bivariate-decoupled", "common", "common-symmetric"):
            path = fit_run / f"fit_{kind}.json"
            assert path.exists()
            s.FitResultModel.model_validate(json.loads(path.read_text()))
        with open(fit_run / "comparison.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4
        assert {r["kind"] for r in rows} == {
            "bivariate", "bivariate-decoupled", "common", "common-symmetric"}
        dims = {r["kind"]: int(r["dim"]) for r in rows}
        assert dims == {"bivariate": 16, "bivariate-decoupled": 14,
                        "common": 13, "common-symmetric": 7}
        reports = json.loads((fit_run / "lr_tests.json").read_text())["reports"]
        assert any(r["null"] == "common-symmetric" and r["alternative"] == "common"
                   and r["dof"] == 6 for r in reports)
        assert {r["process"] for r in reports} == {"left", "right", "both"}

    def test_manifest_records_config_and_version(self, fit_run):
        manifest = json.loads((fit_run / "manifest.json").read_text())
        assert manifest["command"] == "fit"
        assert manifest["config"]["quantile"] == 0.1
        assert "version" in manifest

    def test_determinism_byte_identical(self, runner, tmp_path):
        env_a = {"TAILHAWKES_OUT": str(tmp_path / "rootA")}
        env_b = {"TAILHAWKES_OUT": str(tmp_path / "rootB")}
        args = ["fit", "--input", FIXTURE_CSV, "--train-end", "150",
                "--quantile", "0.1", "--kinds", "common-symmetric",
                "--seed", "3", "--restarts", "1", "--out", "run"]
        run_ok(runner, args, env=env_a)
        run_ok(runner, args, env=env_b)
        dir_a = tmp_path / "rootA" / "run"
        dir_b = tmp_path / "rootB" / "run"
        files = sorted(p.name for p in dir_a.iterdir())
        assert files == sorted(p.name for p in dir_b.iterdir())
        for name in files:
            assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes(), name

    def test_train_end_past_series_is_config_error(self, runner, tmp_path):
        result = runner.invoke(main, ["fit", "--input", FIXTURE_CSV,
                                      "--train-end", "9999",
                                      "--out", str(tmp_path / "x")])
        assert result.exit_code == 2
        assert "train_end" in result.output

    def test_quarantine_on_compute_failure(self, runner, tmp_path):
        out = tmp_path / "q"
        # q = 0.02 leaves ~3 events per tail: the fit precondition fails
        # after exceedances were already written
        result = runner.invoke(main, ["fit", "--input", FIXTURE_CSV,
                                      "--train-end", "150", "--quantile", "0.02",
                                      "--kinds", "common", "--out", str(out)])
        assert result.exit_code == 1
        qdir = out / "quarantine"
        assert qdir.exists()
        assert (qdir / "exceedances.json").exists()
        assert not (out / "exceedances.json").exists()

    def test_config_file_with_flag_override(self, runner, tmp_path):
        cfg = tmp_path / "run.yaml"
        cfg.write_text(
            f"input: {FIXTURE_CSV}\ntrain_end: '150'\nquantile: 0.2\n"
            "kinds: [common-symmetric]\nrestarts: 1\nseed: 3\n")
        out = tmp_path / "out"
        run_ok(runner, ["fit", "--config", str(cfg), "--quantile", "0.1",
                        "--out", str(out)])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["quantile"] == 0.1  # flag beats file
        assert manifest["config"]["kinds"] == ["common-symmetric"]


class TestDiagnoseCommand:
    def test_outputs_and_row_counts(self, runner, fit_run, tmp_path):
        out = tmp_path / "diag"
        run_ok(runner, ["diagnose", "--fit", str(fit_run / "fit_common.json"),
                        "--rolling-window", "10", "--out", str(out)])
        exc = json.loads((fit_run / "exceedances.json").read_text())
        with open(out / "residuals.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(exc["events"])
        reports = json.loads((out / "reports.json").read_text())["reports"]
        names = {r["name"] for r in reports}
        assert {"ks-interarrivals-left", "ks-interarrivals-right",
                "ks-interarrivals-both"} <= names
        for proc in ("left", "right", "both"):
            assert (out / f"acf_{proc}.csv").exists()
            with open(out / f"acf_{proc}.csv") as fh:
                header = next(csv.reader(fh))
            assert header == ["lag", "acf", "band_95", "band_99"]

    def test_poisson_model_passes_ks(self, runner, tmp_path):
        # diagnostics of a true homogeneous model on its own data
        rng = np.random.default_rng(4)
        from tailhawkes.core import HawkesParams

        t = np.flatnonzero(rng.random(8000) < 0.05)
        tail = rng.integers(0, 2, t.size)
        m = np.where(tail == 0, -1.0, 1.0) * rng.exponential(1.0, t.size)
        exc = s.ExceedancesModel(u_left=-1.0, u_right=1.0, T=8000, train_end=8000,
                                 events=[{"t": int(a), "tail": ("left", "right")[b],
                                          "m": float(c)}
                                         for a, b, c in zip(t, tail, m)])
        params = HawkesParams(kind="common", mu=0.05, branching=(0, 0), beta=(1, 1),
                              xi=(0.0, 0.0), varsigma=(1.0, 1.0), eta=(0, 0),
                              alpha=(0, 0))
        exc_path = tmp_path / "exc.json"
        exc_path.write_text(json.dumps(exc.model_dump()))
        fit_path = tmp_path / "fit.json"
        fake_fit = {
            "kind": "common",
            "params": s.HawkesParamsModel.from_core(params).model_dump(),
            "se": {}, "loglik": 0.0, "deviance": 0.0,
            "n_events": {"left": 0, "right": 0, "total": 0},
            "converged": True, "n_restarts_used": 0, "free_names": [],
            "boundary_pinned": [], "se_pseudo_inverse": False, "window": None,
        }
        fit_path.write_text(json.dumps(fake_fit))
        out = tmp_path / "diag"
        run_ok(runner, ["diagnose", "--fit", str(fit_path),
                        "--exceedances", str(exc_path), "--out", str(out)])
        reports = json.loads((out / "reports.json").read_text())["reports"]
        ks = {r["name"]: r["p_value"] for r in reports}
        for proc in ("left", "right", "both"):
            assert ks[f"ks-interarrivals-{proc}"] > 0.05


class TestArtifactConsistency:
    def test_comparison_table_recomputes_from_fit_artifacts(self, fit_run):
        from tailhawkes.diag import aic, bic

        with open(fit_run / "comparison.csv") as fh:
            rows = {r["kind"]: r for r in csv.DictReader(fh)}
        for kind, row in rows.items():
            fit = json.loads((fit_run / f"fit_{kind}.json").read_text())
            dim = len(fit["free_names"])
            assert int(row["dim"]) == dim
            assert float(row["loglik_train"]) == pytest.approx(fit["loglik"], rel=1e-12)
            assert float(row["deviance_train"]) == pytest.approx(fit["deviance"], rel=1e-12)
            assert float(row["aic_train"]) == pytest.approx(aic(fit["loglik"], dim), rel=1e-12)
            n_obs = 2 * fit["n_events"]["total"]
            assert float(row["bic_train"]) == pytest.approx(
                bic(fit["loglik"], dim, n_obs), rel=1e-12)
            # frozen-parameter forecast scores: AIC carries no penalty
            assert float(row["aic_forecast"]) == pytest.approx(
                float(row["deviance_forecast"]), rel=1e-12)


class TestCompareCommand:
    def test_comparison_from_artifacts(self, runner, fit_run, tmp_path):
        out = tmp_path / "cmp"
        run_ok(runner, ["compare",
                        "--fits", str(fit_run / "fit_common.json"),
                        "--fits", str(fit_run / "fit_common-symmetric.json"),
                        "--exceedances", str(fit_run / "exceedances.json"),
                        "--out", str(out)])
        with open(out / "comparison.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert {r["kind"] for r in rows} == {"common", "common-symmetric"}


class TestSimulateCommand:
    def test_replication_files_and_manifest_regeneration(self, runner, fit_run, tmp_path):
        out1 = tmp_path / "sims"
        run_ok(runner, ["simulate", "--params", str(fit_run / "fit_common.json"),
                        "--length", "500", "--replications", "10", "--seed", "9",
                        "--out", str(out1)])
        csvs = sorted(out1.glob("series_*.csv"))
        assert len(csvs) == 10
        out2 = tmp_path / "sims2" / "regen"
        run_ok(runner, ["simulate", "--manifest", str(out1 / "manifest.json"),
                        "--out", str(out2)])
        for name in (p.name for p in csvs):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_series_csv_schema(self, runner, fit_run, tmp_path):
        out = tmp_path / "one"
        run_ok(runner, ["simulate", "--params", str(fit_run / "fit_common.json"),
                        "--length", "400", "--seed", "1", "--out", str(out)])
        with open(out / "series_000.csv") as fh:
            header = next(csv.reader(fh))
        assert header == ["t", "tail", "m"]


class TestGarchCommand:
    def test_white_noise_leaves_no_excitation(self, runner, tmp_path):
        rng = np.random.default_rng(33)
        data = tmp_path / "wn.csv"
        with open(data, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["date", "ret"])
            for i, v in enumerate(rng.standard_normal(4000)):
                w.writerow([f"d{i:05d}", repr(float(v))])
        out = tmp_path / "garch"
        run_ok(runner, ["garch", "--input", str(data), "--returns-column", "ret",
                        "--quantile", "0.05", "--variants", "0n",
                        "--restarts", "2", "--out", str(out)])
        with open(out / "residual_hawkes.csv") as fh:
            row = next(csv.DictReader(fh))
        for key in ("gamma_left_left", "gamma_left_right",
                    "gamma_right_left", "gamma_right_right"):
            assert abs(float(row[key])) < 0.3, key
        with open(out / "filtered_0n.csv") as fh:
            header = next(csv.reader(fh))
        assert header == ["t", "x", "sigma", "z"]
        with open(out / "garch_fits.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 1 and rows[0]["variant"] == "0n"
