import csv
import hashlib
import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from lionlstm.cli import main
from lionlstm.dataio import ScalingParams, TimeSeriesDataset, load_csv, months_between, write_csv
from lionlstm.ffnn import FfnnParams, predict_batch
from lionlstm.forecaster import TrainedModel
from lionlstm.schemas import CV_REPORT, EVAL_REPORT, METRICS_DOC

FAST = {"ffnn_epochs": 80, "lstm_epochs": 10,
        "la": {"n": 4, "nrm": 2, "epochs": 6}}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--months", "228", "--seed", "4", "--out", str(d / "data.csv"), "-q"]) == 0
    (d / "fast.json").write_text(json.dumps({**FAST, "data": str(d / "data.csv")}))
    return d


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def tree_bytes(root: Path):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*"))
            if p.is_file()}


class TestSynth:
    def test_deterministic_and_loadable(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["synth", "--months", "228", "--seed", "9", "--out", str(a), "-q"]) == 0
        assert main(["synth", "--months", "228", "--seed", "9", "--out", str(b), "-q"]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert len(load_csv(a)) == 228

    def test_too_short(self, tmp_path, capsys):
        assert main(["synth", "--months", "23", "--out", str(tmp_path / "x.csv")]) == 2
        assert "months" in capsys.readouterr().err

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["synth", "--out", str(blocker / "sub" / "x.csv"), "-q"]) == 2


class TestExitCodes:
    def test_unknown_model_is_usage_error(self, workdir, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--model", "svm", "--config", str(workdir / "fast.json")])
        assert exc.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text('{"learning_rate": 1}')
        assert main(["train", "--model", "ffnn", "--config", str(cfg), "-q"]) == 2

    def test_missing_data_setting(self, tmp_path):
        assert main(["train", "--model", "ffnn", "--out", str(tmp_path), "-q"]) == 2

    def test_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("date,gwl_m,rainfall_mm\n2000-01,1.0,2.0\n2000-03,1.0,2.0\n")
        assert main(["train", "--model", "ffnn", "--data", str(bad), "--out", str(tmp_path)]) == 3
        assert "data error" in capsys.readouterr().err

    def test_numerical_failure(self, workdir, tmp_path):
        cfg = tmp_path / "diverge.json"
        cfg.write_text(json.dumps({"ffnn_lr": 1e12, "ffnn_epochs": 200}))
        code = main(["train", "--model", "ffnn", "--config", str(cfg),
                     "--data", str(workdir / "data.csv"), "--out", str(tmp_path / "o"), "-q"])
        assert code == 4


class TestTrain:
    def test_lstm_la_trace_and_manifest(self, workdir, tmp_path):
        cfg = tmp_path / "la.json"
        cfg.write_text(json.dumps({"la": {"n": 3, "nrm": 1, "epochs": 100}}))
        out = tmp_path / "run"
        assert main(["train", "--model", "lstm-la", "--config", str(cfg), "--no-plots",
                     "--data", str(workdir / "data.csv"), "--out", str(out), "-q"]) == 0
        rows = read_rows(out / "trace.csv")
        assert rows[0] == ["epoch", "best_rmse", "evaluations"] and len(rows) == 101
        best = [float(r[1]) for r in rows[1:]]
        assert all(b <= a for a, b in zip(best, best[1:]))
        manifest = json.loads((out / "manifest.json").read_text())
        digest = hashlib.sha256((workdir / "data.csv").read_bytes()).hexdigest()
        assert manifest["data"]["sha256"] == digest
        assert manifest["evaluations"] == int(rows[-1][2]) == 6 + 100 * (2 * 2 + 2)
        assert manifest["config"]["la"]["epochs"] == 100 and manifest["seed"] == 0

    @pytest.mark.parametrize("model", ["ffnn", "lstm", "lstm-la"])
    def test_rerun_byte_identical(self, workdir, tmp_path, model):
        args = ["train", "--model", model, "--config", str(workdir / "fast.json"), "-q"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")
        assert (tmp_path / "a" / "trace.png").stat().st_size > 0

    def test_parallel_matches_serial(self, workdir, tmp_path):
        args = ["train", "--model", "lstm-la", "--config", str(workdir / "fast.json"), "-q"]
        assert main(args + ["--workers", "1", "--out", str(tmp_path / "s")]) == 0
        assert main(args + ["--workers", "4", "--out", str(tmp_path / "p")]) == 0
        for name in ("model.json", "trace.csv", "trace.json", "trace.png"):
            assert (tmp_path / "s" / name).read_bytes() == (tmp_path / "p" / name).read_bytes()

    def test_seed_flag_changes_model(self, workdir, tmp_path):
        args = ["train", "--model", "ffnn", "--config", str(workdir / "fast.json"), "-q", "--no-plots"]
        main(args + ["--out", str(tmp_path / "a")])
        main(args + ["--seed", "5", "--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "model.json").read_bytes() != (tmp_path / "b" / "model.json").read_bytes()


def oracle_dataset(months=120):
    """A series whose next month is exactly what a fixed FFNN predicts."""
    params = FfnnParams([[1.5, -0.8], [0.3, 0.9], [-1.2, 0.4]], [0.1, -0.2, 0.3],
                        [0.6, -0.4, 0.5], 0.2)
    scaling = ScalingParams(0.0, 10.0, 0.0, 100.0)
    rain = np.random.default_rng(1).uniform(0, 100, months)
    x = [0.4]
    for t in range(months - 1):
        x.append(float(predict_batch(params, np.array([[x[t], rain[t] / 100]]))[0]))
    ds = TimeSeriesDataset(tuple(months_between((2001, 1), months)), np.array(x) * 10, rain)
    model = TrainedModel("ffnn", params, scaling, 12, train_records=97, train_fraction=0.8)
    return ds, model


class TestEvaluate:
    def test_perfect_oracle(self, tmp_path, capsys):
        ds, model = oracle_dataset()
        write_csv(ds, tmp_path / "d.csv", gwl_fmt="{:.17g}", rain_fmt="{:.17g}")
        (tmp_path / "m.json").write_text(json.dumps(model.to_dict()))
        args = ["evaluate", "--model", str(tmp_path / "m.json"), "--data", str(tmp_path / "d.csv")]
        assert main(args) == 0
        first = capsys.readouterr().out
        doc = json.loads(first)
        jsonschema.validate(doc, METRICS_DOC)
        assert doc["metrics"]["accuracy_pct"] == pytest.approx(100.0, abs=1e-9)
        assert doc["test_samples"] == 108 - 86
        assert main(args) == 0
        assert capsys.readouterr().out == first

    def test_trained_model_schema_and_file(self, workdir, tmp_path, capsys):
        main(["train", "--model", "lstm", "--config", str(workdir / "fast.json"), "-q",
              "--no-plots", "--out", str(tmp_path / "t")])
        capsys.readouterr()
        assert main(["evaluate", "--model", str(tmp_path / "t" / "model.json"),
                     "--data", str(workdir / "data.csv"), "--out", str(tmp_path / "e")]) == 0
        doc = json.loads((tmp_path / "e" / "metrics.json").read_text())
        jsonschema.validate(doc, METRICS_DOC)
        assert doc["test_samples"] == 44 and doc["test_start"] == "2015-05"

    def test_missing_model(self, workdir, tmp_path):
        assert main(["evaluate", "--model", str(tmp_path / "none.json"),
                     "--data", str(workdir / "data.csv")]) == 2


class TestCompareCrossvalForecast:
    def test_compare(self, workdir, tmp_path):
        out = tmp_path / "cmp"
        assert main(["compare", "--config", str(workdir / "fast.json"), "--out", str(out), "-q"]) == 0
        report = json.loads((out / "report.json").read_text())
        jsonschema.validate(report, EVAL_REPORT)
        assert set(report["models"]) == {"ffnn", "lstm", "lstm_la"}
        rows = read_rows(out / "predictions.csv")
        assert rows[0] == ["date", "observed", "ffnn", "lstm", "lstm_la"]
        assert len(rows) - 1 == report["test_samples"]
        assert all(len(r) == 5 and all(v != "" for v in r) for r in rows[1:])
        for name in ("comparison.png", "metrics.png", "manifest.json"):
            assert (out / name).is_file()
        assert main(["compare", "--config", str(workdir / "fast.json"), "--out",
                     str(tmp_path / "again"), "-q"]) == 0
        assert tree_bytes(out) == tree_bytes(tmp_path / "again")

    def test_compare_with_cv(self, workdir, tmp_path):
        out = tmp_path / "cmp"
        assert main(["compare", "--crossval", "--no-plots", "--config", str(workdir / "fast.json"),
                     "--out", str(out), "-q"]) == 0
        report = json.loads((out / "report.json").read_text())
        jsonschema.validate(report, EVAL_REPORT)
        assert len(report["models"]["lstm_la"]["cv"]["folds"]) == 5

    def test_crossval(self, workdir, tmp_path):
        out = tmp_path / "cv"
        assert main(["crossval", "--config", str(workdir / "fast.json"), "--out", str(out), "-q"]) == 0
        doc = json.loads((out / "cv.json").read_text())
        jsonschema.validate(doc, CV_REPORT)
        rows = read_rows(out / "cv_folds.csv")
        assert rows[0] == ["model", "fold", "accuracy_pct"]
        for kind in ("ffnn", "lstm", "lstm_la"):
            mine = [r for r in rows[1:] if r[0] == kind]
            assert [r[1] for r in mine] == ["0", "1", "2", "3", "4"]
            assert [float(r[2]) for r in mine] == doc["models"][kind]["cv"]["folds"]
        assert (out / "cv_boxplot.png").is_file()

    @pytest.fixture
    def models(self, workdir, tmp_path):
        paths = []
        for kind in ("ffnn", "lstm-la"):
            out = tmp_path / kind
            main(["train", "--model", kind, "--config", str(workdir / "fast.json"), "-q",
                  "--no-plots", "--out", str(out)])
            paths.append(str(out / "model.json"))
        return paths

    def test_forecast_twelve(self, workdir, tmp_path, models, capsys):
        out = tmp_path / "fc"
        args = ["forecast", "--data", str(workdir / "data.csv"), "--out", str(out)]
        for p in models:
            args += ["--model", p]
        assert main(args) == 0
        assert "warning" not in capsys.readouterr().err
        rows = read_rows(out / "forecast.csv")
        assert len(rows) == 13
        assert rows[1][0] == "2019-01" and rows[-1][0] == "2019-12"
        for r in rows[1:]:
            assert r[1] == "" and r[3] == "" and r[2] != "" and r[4] != ""
        assert (out / "forecast.png").is_file()
        first = tree_bytes(out)
        assert main(args) == 0
        assert tree_bytes(out) == first

    def test_forecast_long_horizon_warns(self, workdir, tmp_path, models, capsys):
        args = ["forecast", "--model", models[0], "--horizon", "18", "--no-plots",
                "--data", str(workdir / "data.csv"), "--out", str(tmp_path / "fc")]
        assert main(args) == 0
        err = capsys.readouterr().err
        assert err.count("warning") == 1 and "12-month" in err
        assert len(read_rows(tmp_path / "fc" / "forecast.csv")) == 19

    def test_forecast_duplicate_kind(self, workdir, tmp_path, models):
        args = ["forecast", "--model", models[0], "--model", models[0],
                "--data", str(workdir / "data.csv"), "--out", str(tmp_path / "fc")]
        assert main(args) == 2
