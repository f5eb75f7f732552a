"""Command-line entry point.

Exit codes: 0 success, 2 configuration/usage error, 3 data error,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import warnings
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .dataio import (TimeSeriesDataset, denormalize, format_month, kfold_plan, load_csv,
                     make_windows, normalize, parse_month, split_point, write_csv)
from .errors import ConfigError, DataError, LeadTimeWarning, NumericalError
from .evalkit import cross_validate, metric_set
from .forecaster import (KINDS, TrainedModel, compare_models, forecast_recursive, model_family,
                         prepare, train_model)
from .synth import MIN_MONTHS, generate_series

log = logging.getLogger("lionlstm")

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 2, 3, 4
MODEL_CHOICES = {"ffnn": "ffnn", "lstm": "lstm", "lstm-la": "lstm_la"}
SERIES_HEADER = ["date", "observed", "ffnn", "lstm", "lstm_la"]


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def _write_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return path


def _write_rows(path: Path, header, rows) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def sha256_of(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _out_dir(args, cfg: RunConfig) -> Path:
    out = Path(args.out or cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    return out


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "data", None) is not None:
        overrides["data"] = args.data
    if getattr(args, "workers", None) is not None:
        la = cfg.to_dict()["la"]
        la["workers"] = args.workers
        overrides["la"] = la
    return cfg.with_overrides(**overrides) if overrides else cfg


def _load_data(cfg: RunConfig) -> tuple[TimeSeriesDataset, dict]:
    if not cfg.data:
        raise ConfigError("no input data: pass --data or set 'data' in the config")
    ds = load_csv(cfg.data)
    return ds, {"path": cfg.data, "sha256": sha256_of(cfg.data), "records": len(ds)}


def _manifest(command: str, cfg: RunConfig, data_info: Optional[dict], **extra) -> dict:
    doc = {"command": command, "version": __version__, "seed": cfg.seed,
           "config": cfg.to_dict(), "data": data_info}
    doc.update(extra)
    return doc


def _series_rows(months, observed, columns: dict):
    rows = []
    for k, ym in enumerate(months):
        obs = None if observed is None else observed[k]
        rows.append([format_month(ym), _fmt(obs)]
                    + [_fmt(columns[kind][k]) if kind in columns else "" for kind in KINDS])
    return rows


def cmd_synth(args) -> int:
    if args.months < MIN_MONTHS:
        raise ConfigError(f"--months must be >= {MIN_MONTHS}")
    start = parse_month(args.start)
    ds = generate_series(args.months, args.seed if args.seed is not None else 0, start=start)
    out = Path(args.out or "synthetic.csv")
    try:
        if out.parent != Path(""):
            out.parent.mkdir(parents=True, exist_ok=True)
        write_csv(ds, out)
    except OSError as exc:
        raise ConfigError(f"cannot write {out}: {exc}") from None
    log.info("wrote %d months to %s", len(ds), out)
    return 0


def _progress_logger(epoch_total: int):
    def sink(update):
        epoch, best, evals = update
        log.info("epoch %d/%d best_rmse=%.6f evaluations=%d", epoch, epoch_total, best, evals)
    return sink


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    kind = MODEL_CHOICES[args.model]
    ds, data_info = _load_data(cfg)
    out = _out_dir(args, cfg)
    prep = prepare(ds, cfg.lag, cfg.train_fraction)
    model = train_model(kind, prep.train, cfg, cfg.seed, prep.scaling, prep.train_records,
                        _progress_logger(cfg.la.epochs))
    _write_json(out / "model.json", model.to_dict())
    if kind == "lstm_la":
        evals = [2 * cfg.la.n + (e + 1) * cfg.la_config().evaluations_per_epoch
                 for e in range(len(model.training_trace))]
        _write_rows(out / "trace.csv", ["epoch", "best_rmse", "evaluations"],
                    [[e + 1, _fmt(v), n] for e, (v, n) in enumerate(zip(model.training_trace, evals))])
        _write_json(out / "trace.json", {"epoch": list(range(1, len(evals) + 1)),
                                         "best_rmse": model.training_trace, "evaluations": evals})
        ylabel = "Best training RMSE (normalized)"
    else:
        _write_rows(out / "trace.csv", ["epoch", "train_mse"],
                    [[e + 1, _fmt(v)] for e, v in enumerate(model.training_trace)])
        ylabel = "Training MSE (normalized)"
    if not args.no_plots and model.training_trace:
        from .plotting import plot_trace
        plot_trace(model.training_trace, ylabel, out / "trace.png")
    _write_json(out / "manifest.json", _manifest(
        "train", cfg, data_info, model=kind, evaluations=model.evaluations,
        train_samples=len(prep.train), test_samples=len(prep.test)))
    log.info("trained %s; outputs in %s", kind, out)
    return 0


def _load_model(path: str | Path) -> TrainedModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"model file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return TrainedModel.from_dict(doc)


def evaluate_model(model: TrainedModel, ds: TimeSeriesDataset) -> dict:
    """Metrics on the chronological test split using the model's own scaling."""
    samples = make_windows(normalize(ds, model.scaling), model.lag)
    n_train = split_point(len(samples), model.train_fraction)
    test = samples.take(slice(n_train, None))
    pred = denormalize(model.predict_normalized(test.inputs), model.scaling)
    obs = denormalize(test.targets, model.scaling)
    return {
        "model": model.kind,
        "test_samples": len(test),
        "test_start": format_month(ds.timestamps[int(test.origin_index[0])]),
        "test_end": format_month(ds.timestamps[int(test.origin_index[-1])]),
        "metrics": metric_set(pred, obs).to_dict(),
    }


def cmd_evaluate(args) -> int:
    cfg = _resolve_config(args)
    model = _load_model(args.model)
    ds, _ = _load_data(cfg)
    doc = evaluate_model(model, ds)
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        out = _out_dir(args, cfg)
        (out / "metrics.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_compare(args) -> int:
    cfg = _resolve_config(args)
    ds, data_info = _load_data(cfg)
    out = _out_dir(args, cfg)
    cmp = compare_models(ds, cfg, _progress_logger(cfg.la.epochs))
    report = {"seed": cfg.seed, "test_samples": len(cmp.observed),
              "test_start": format_month(cmp.months[0]), "test_end": format_month(cmp.months[-1]),
              "models": {k: cmp.metrics[k].to_dict() for k in KINDS}}
    if args.crossval:
        prep = cmp.prepared
        plan = kfold_plan(len(prep.train), cfg.folds)
        for kind in KINDS:
            summary = cross_validate(model_family(kind, cfg), prep.train, plan, cfg.seed, prep.scaling)
            report["models"][kind]["cv"] = summary.to_dict()
    _write_json(out / "report.json", report)
    _write_rows(out / "predictions.csv", SERIES_HEADER,
                _series_rows(cmp.months, cmp.observed, cmp.predictions))
    for kind, model in cmp.models.items():
        _write_json(out / f"model_{kind}.json", model.to_dict())
    if not args.no_plots:
        from .plotting import plot_comparison, plot_metric_bars
        plot_comparison(cmp.months, cmp.observed, cmp.predictions, out / "comparison.png")
        plot_metric_bars(report["models"], out / "metrics.png")
    _write_json(out / "manifest.json", _manifest(
        "compare", cfg, data_info, evaluations=cmp.models["lstm_la"].evaluations))
    for kind in KINDS:
        m = cmp.metrics[kind]
        log.info("%-8s rmse=%.4f mae=%.4f accuracy=%.2f%%", kind, m.rmse, m.mae, m.accuracy_pct)
    return 0


def cmd_crossval(args) -> int:
    cfg = _resolve_config(args)
    ds, data_info = _load_data(cfg)
    out = _out_dir(args, cfg)
    prep = prepare(ds, cfg.lag, cfg.train_fraction)
    plan = kfold_plan(len(prep.train), cfg.folds)
    summaries = {}
    for kind in KINDS:
        log.info("cross-validating %s over %d folds", kind, cfg.folds)
        summaries[kind] = cross_validate(model_family(kind, cfg), prep.train, plan, cfg.seed,
                                         prep.scaling)
    _write_json(out / "cv.json", {"folds": cfg.folds, "seed": cfg.seed,
                                  "fold_sizes": plan.sizes(),
                                  "models": {k: {"cv": s.to_dict()} for k, s in summaries.items()}})
    rows = [[kind, f, _fmt(acc)] for kind, s in summaries.items() for f, acc in enumerate(s.folds)]
    _write_rows(out / "cv_folds.csv", ["model", "fold", "accuracy_pct"], rows)
    if not args.no_plots:
        from .plotting import plot_cv_boxplot
        plot_cv_boxplot({k: s.folds for k, s in summaries.items()}, out / "cv_boxplot.png")
    _write_json(out / "manifest.json", _manifest("crossval", cfg, data_info))
    for kind, s in summaries.items():
        log.info("%-8s median=%.2f%% q1=%.2f q3=%.2f", kind, s.median, s.q1, s.q3)
    return 0


def cmd_forecast(args) -> int:
    cfg = _resolve_config(args)
    models = [_load_model(p) for p in args.model]
    kinds = [m.kind for m in models]
    if len(set(kinds)) != len(kinds):
        raise ConfigError("at most one model per kind")
    ds, data_info = _load_data(cfg)
    out = _out_dir(args, cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", LeadTimeWarning)
        results = {m.kind: forecast_recursive(m, ds, args.horizon) for m in models}
    for msg in dict.fromkeys(str(w.message) for w in caught
                             if issubclass(w.category, LeadTimeWarning)):
        print(f"warning: {msg}", file=sys.stderr)
    first = next(iter(results.values()))
    months = first.months()
    _write_rows(out / "forecast.csv", SERIES_HEADER,
                _series_rows(months, None, {k: r.predictions for k, r in results.items()}))
    if not args.no_plots and args.horizon > 0:
        from .plotting import plot_forecast
        tail = min(len(ds), 36)
        plot_forecast(ds.timestamps[-tail:], ds.gwl[-tail:], months,
                      {k: r.predictions for k, r in results.items()}, out / "forecast.png")
    _write_json(out / "manifest.json", _manifest(
        "forecast", cfg, data_info, horizon=args.horizon,
        models=[str(p) for p in args.model],
        rainfall_assumption=first.rainfall_assumption))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", help="output directory (a file path for synth)")
    common.add_argument("-q", "--quiet", action="store_true", help="suppress progress logging")

    runs = argparse.ArgumentParser(add_help=False)
    runs.add_argument("--data", help="input CSV (overrides the config)")
    runs.add_argument("--no-plots", action="store_true", help="skip PNG figures")

    parser = argparse.ArgumentParser(prog="lionlstm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic monthly series")
    p.add_argument("--months", type=int, default=228)
    p.add_argument("--start", default="2000-01", help="first month, YYYY-MM")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", parents=[common, runs], help="train one model family")
    p.add_argument("--model", required=True, choices=sorted(MODEL_CHOICES))
    p.add_argument("--workers", type=int, help="parallel fitness evaluations (lstm-la)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common, runs], help="test-split metrics of a model")
    p.add_argument("--model", required=True, help="model JSON written by train")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", parents=[common, runs], help="train and score all three models")
    p.add_argument("--crossval", action="store_true", help="add k-fold CV summaries to the report")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("crossval", parents=[common, runs], help="k-fold CV of all three models")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("forecast", parents=[common, runs], help="recursive multi-month forecast")
    p.add_argument("--model", required=True, action="append", help="model JSON (repeatable)")
    p.add_argument("--horizon", type=int, default=12)
    p.set_defaults(func=cmd_forecast)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
