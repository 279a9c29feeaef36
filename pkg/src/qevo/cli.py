"""Command-line front end: ingest traces, train, predict, ablate, plot.

Every run is deterministic under a fixed --seed; report files contain no
timestamps, paths, or environment details, so identical configs produce
byte-identical artifacts regardless of evaluation thread count
(QEVO_THREADS). Exit codes: 0 success, 1 domain error, 2 usage/IO error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import statistics
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dataset, evolve, metrics, network, trace_io
from .errors import (
    DimensionMismatchError,
    InputError,
    MalformedReportError,
    QevoError,
    SeriesTooShortError,
)

REPORT_SCHEMA = "qevo.report/1"
FORECAST_SCHEMA = "qevo.forecast/1"
ABLATION_SCHEMA = "qevo.ablation/1"
PLOT_SCHEMA = "qevo.plot/1"

_METRIC_NAMES = ("rmse", "mae", "mape")

_CONFIG_KEYS = {
    "input": str,
    "genome": str,
    "timestamp_col": str,
    "value_col": str,
    "delimiter": str,
    "header": lambda v: v.lower() in ("1", "true", "yes"),
    "pi_minutes": int,
    "window": int,
    "population": int,
    "generations": int,
    "train_frac": float,
    "seed": int,
    "seeds": int,
    "out_dir": str,
    "mode": str,
    "metrics": str,
    "hidden_min": int,
    "hidden_max": int,
    "depth_min": int,
    "depth_max": int,
}

_DEFAULTS = {
    "timestamp_col": "timestamp",
    "value_col": "value",
    "delimiter": ",",
    "header": True,
    "pi_minutes": 5,
    "window": 10,
    "population": 80,
    "generations": 50,
    "train_frac": 0.6,
    "seed": 0,
    "seeds": 5,
    "mode": "full",
    "metrics": "rmse,mae,mape",
    "hidden_min": 5,
    "hidden_max": 10,
    "depth_min": 1,
    "depth_max": 4,
}


@dataclass
class RunConfig:
    """Merged view of defaults, config file, and CLI flags (flags win)."""

    input: str | None = None
    genome: str | None = None
    timestamp_col: str = "timestamp"
    value_col: str = "value"
    delimiter: str = ","
    header: bool = True
    pi_minutes: int = 5
    window: int = 10
    population: int = 80
    generations: int = 50
    train_frac: float = 0.6
    seed: int = 0
    seeds: int = 5
    out_dir: str = "out"
    mode: str = "full"
    metrics: str = "rmse,mae,mape"
    hidden_min: int = 5
    hidden_max: int = 10
    depth_min: int = 1
    depth_max: int = 4

    def selected_metrics(self) -> list[str]:
        names = [m.strip() for m in self.metrics.split(",") if m.strip()]
        for name in names:
            if name not in _METRIC_NAMES:
                raise InputError(f"unknown metric {name!r}; choose from {_METRIC_NAMES}")
        return names

    def trace_format(self) -> trace_io.TraceFormat:
        return trace_io.TraceFormat(
            timestamp_col=self.timestamp_col,
            value_col=self.value_col,
            delimiter=self.delimiter,
            header=self.header,
        )

    def training_config(self, seed: int | None = None, mode: str | None = None):
        if not 0.0 < self.train_frac < 1.0:
            raise InputError("train_frac must be in (0, 1)")
        if self.pi_minutes < 1:
            raise InputError("pi_minutes must be >= 1")
        return evolve.TrainingConfig(
            population_size=self.population,
            generations=self.generations,
            window_size=self.window,
            hidden_range=(self.hidden_min, self.hidden_max),
            depth_range=(self.depth_min, self.depth_max),
            seed=self.seed if seed is None else seed,
            mode=evolve.TrainingMode(mode or self.mode),
            threads=_thread_cap(),
        )


def _thread_cap() -> int:
    raw = os.environ.get("QEVO_THREADS", "1")
    try:
        threads = int(raw)
    except ValueError:
        raise InputError(f"QEVO_THREADS must be an integer, got {raw!r}")
    if threads < 1:
        raise InputError(f"QEVO_THREADS must be >= 1, got {threads}")
    return threads


def load_config_file(path: str | Path) -> dict:
    """Parse a flat `key = value` config file; '#' starts a comment."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    values = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise InputError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _CONFIG_KEYS[key](raw.strip())
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: bad value for {key}: {exc}")
    return values


def _merge_config(args: argparse.Namespace) -> RunConfig:
    merged = dict(_DEFAULTS)
    if getattr(args, "config", None):
        merged.update(load_config_file(args.config))
    for key in RunConfig.__dataclass_fields__:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            merged[key] = flag_value
    if getattr(args, "no_header", False):
        merged["header"] = False
    return RunConfig(**merged)


def _load_series(cfg: RunConfig) -> trace_io.AggregatedSeries:
    if not cfg.input:
        raise InputError("--input is required")
    trace = trace_io.parse_trace(cfg.input, cfg.trace_format())
    return trace_io.aggregate(trace, cfg.pi_minutes)


def _prepare_datasets(cfg: RunConfig):
    series = _load_series(cfg)
    if len(series.values) < cfg.window + 2:
        raise SeriesTooShortError(
            f"aggregated series has {len(series.values)} values; "
            f"training needs at least window + 2 = {cfg.window + 2}"
        )
    params = dataset.fit_normalizer(series)
    normalized = dataset.normalize(np.asarray(series.values), params)
    windows = dataset.build_windows(normalized, cfg.window)
    train_ds, test_ds = dataset.split(windows, cfg.train_frac)
    return series, params, windows, train_ds, test_ds


def _metric_dict(actual, predicted, names: list[str]) -> dict:
    result = metrics.evaluate(actual, predicted).to_dict()
    return {k: result[k] for k in (*names, "count")}


def _forecast_rows(genome, windows, params, split_at: int) -> list[dict]:
    """One row per window target, plus one extrapolated row past the series end."""
    preds_norm = network.forward_batch(genome, windows.inputs)
    rows = []
    n = windows.window_size
    for i in range(len(windows)):
        rows.append(
            {
                "index": n + i,
                "split": "train" if i < split_at else "test",
                "actual": dataset.denormalize(float(windows.targets[i]), params),
                "predicted": dataset.denormalize(float(preds_norm[i]), params),
                "actual_normalized": float(windows.targets[i]),
                "predicted_normalized": float(preds_norm[i]),
            }
        )
    # Window ending at the last known value predicts one step past the series.
    tail = np.concatenate([windows.inputs[-1][1:], [windows.targets[-1]]])
    next_norm = network.forward(genome, tail)
    rows.append(
        {
            "index": n + len(windows),
            "split": "future",
            "actual": None,
            "predicted": dataset.denormalize(next_norm, params),
            "actual_normalized": None,
            "predicted_normalized": next_norm,
        }
    )
    return rows


def write_forecast_csv(rows: list[dict], path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema: {FORECAST_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["index", "split", "actual", "predicted", "actual_normalized", "predicted_normalized"]
        )
        for row in rows:
            writer.writerow(
                [
                    row["index"],
                    row["split"],
                    "" if row["actual"] is None else repr(float(row["actual"])),
                    repr(float(row["predicted"])),
                    ""
                    if row["actual_normalized"] is None
                    else repr(float(row["actual_normalized"])),
                    repr(float(row["predicted_normalized"])),
                ]
            )


def read_forecast_csv(path: str | Path) -> list[dict]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"forecast file not found: {path}")
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or "predicted" not in reader.fieldnames:
        raise MalformedReportError(f"{path} is not a forecast file")
    for raw in reader:
        try:
            rows.append(
                {
                    "index": int(raw["index"]),
                    "split": raw.get("split", ""),
                    "actual": float(raw["actual"]) if raw.get("actual") else None,
                    "predicted": float(raw["predicted"]),
                }
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedReportError(f"{path}: bad forecast row {raw}: {exc}")
    return rows


def _json_ready(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    return value


def _write_json(payload: dict, path: Path) -> None:
    path.write_text(
        json.dumps(_json_ready(payload), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def cmd_train(cfg: RunConfig, checkpoint_dir: str | None = None) -> int:
    series, params, windows, train_ds, test_ds = _prepare_datasets(cfg)
    training_config = cfg.training_config()
    best, report = evolve.train(
        training_config, train_ds, checkpoint_dir=checkpoint_dir
    )
    evolve.convergence_monitor(report, patience=max(cfg.generations, 1))

    names = cfg.selected_metrics()
    train_pred = network.forward_batch(best, train_ds.inputs)
    test_pred = network.forward_batch(best, test_ds.inputs)
    rows = _forecast_rows(best, windows, params, split_at=len(train_ds))

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    network.save_genome(best, out_dir / "genome.bin")
    write_forecast_csv(rows, out_dir / "forecast.csv")
    payload = {
        "schema": REPORT_SCHEMA,
        "run": {
            "pi_minutes": cfg.pi_minutes,
            "window": cfg.window,
            "population": cfg.population,
            "generations": cfg.generations,
            "train_frac": cfg.train_frac,
            "seed": cfg.seed,
            "mode": cfg.mode,
            "hidden_range": [cfg.hidden_min, cfg.hidden_max],
            "depth_range": [cfg.depth_min, cfg.depth_max],
        },
        "normalization": {"d_min": params.d_min, "d_max": params.d_max},
        "training": report.to_dict(),
        "metrics": {
            "train": _metric_dict(train_ds.targets, train_pred, names),
            "test": _metric_dict(test_ds.targets, test_pred, names),
        },
        "forecast": {
            "test_actual_normalized": [float(v) for v in test_ds.targets],
            "test_predicted_normalized": [float(v) for v in test_pred],
        },
    }
    _write_json(payload, out_dir / "report.json")
    print(
        f"trained {cfg.mode} mode: best training fitness {report.best_fitness:.6f}, "
        f"test rmse {payload['metrics']['test'].get('rmse', float('nan')):.6f}"
    )
    print(f"artifacts in {out_dir}")
    return 0


def cmd_predict(cfg: RunConfig, explicit_window: int | None = None) -> int:
    if not cfg.genome:
        raise InputError("--genome is required")
    genome = network.load_genome(cfg.genome)
    n = genome.architecture.input_width
    if explicit_window is not None and explicit_window != n:
        raise DimensionMismatchError(
            f"--window {explicit_window} does not match genome input width {n}"
        )
    series = _load_series(cfg)
    params = dataset.fit_normalizer(series)
    normalized = dataset.normalize(np.asarray(series.values), params)
    windows = dataset.build_windows(normalized, n)
    rows = _forecast_rows(genome, windows, params, split_at=len(windows))
    for row in rows:
        if row["split"] == "train":
            row["split"] = "series"
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_forecast_csv(rows, out_dir / "forecast.csv")
    print(f"wrote {len(rows)} forecast rows to {out_dir / 'forecast.csv'}")
    return 0


def cmd_ablate(cfg: RunConfig) -> int:
    series, params, windows, train_ds, test_ds = _prepare_datasets(cfg)
    names = cfg.selected_metrics()
    modes = [m.value for m in evolve.TrainingMode]
    seeds = [cfg.seed + k for k in range(cfg.seeds)]
    runs = []
    for mode in modes:
        for seed in seeds:
            best, report = evolve.train(cfg.training_config(seed=seed, mode=mode), train_ds)
            test_pred = network.forward_batch(best, test_ds.inputs)
            runs.append(
                {
                    "mode": mode,
                    "seed": seed,
                    "best_training_fitness": report.best_fitness,
                    **_metric_dict(test_ds.targets, test_pred, names),
                }
            )
    medians = {
        mode: {
            name: statistics.median(r[name] for r in runs if r["mode"] == mode)
            for name in names
        }
        for mode in modes
    }

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "schema": ABLATION_SCHEMA,
        "run": {
            "pi_minutes": cfg.pi_minutes,
            "window": cfg.window,
            "population": cfg.population,
            "generations": cfg.generations,
            "train_frac": cfg.train_frac,
            "seeds": seeds,
        },
        "runs": runs,
        "medians": medians,
    }
    _write_json(payload, out_dir / "ablation.json")
    with (out_dir / "ablation.csv").open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema: {ABLATION_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(["mode", "seed", *names])
        for r in runs:
            writer.writerow([r["mode"], r["seed"], *(repr(r[name]) for name in names)])
    for mode in modes:
        cells = ", ".join(f"{name}={medians[mode][name]:.5f}" for name in names)
        print(f"{mode}: median {cells}")
    return 0


def _svg_polyline(values: list[float], lo: float, hi: float, width: int, height: int, pad: int) -> str:
    span = (hi - lo) or 1.0
    n = len(values)
    points = []
    for i, v in enumerate(values):
        x = pad + (width - 2 * pad) * (i / max(n - 1, 1))
        y = pad + (height - 2 * pad) * (1.0 - (v - lo) / span)
        points.append(f"{x:.2f},{y:.2f}")
    return " ".join(points)


def write_chart_svg(actual: list[float], predicted: list[float], path: Path) -> None:
    width, height, pad = 900, 320, 24
    both = actual + predicted
    lo, hi = min(both), max(both)
    svg = (
        f"<!-- schema: {PLOT_SCHEMA} -->\n"
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f'  <rect width="{width}" height="{height}" fill="white"/>\n'
        f'  <polyline fill="none" stroke="#1f77b4" stroke-width="1.5" '
        f'points="{_svg_polyline(actual, lo, hi, width, height, pad)}"/>\n'
        f'  <polyline fill="none" stroke="#d62728" stroke-width="1.5" '
        f'points="{_svg_polyline(predicted, lo, hi, width, height, pad)}"/>\n'
        f'  <text x="{pad}" y="16" font-size="12" fill="#1f77b4">actual</text>\n'
        f'  <text x="{pad + 60}" y="16" font-size="12" fill="#d62728">predicted</text>\n'
        f"</svg>\n"
    )
    path.write_text(svg, encoding="utf-8")


def cmd_plot_data(forecast_path: str, report_path: str | None, out_dir: str) -> int:
    if report_path:
        path = Path(report_path)
        if not path.is_file():
            raise FileNotFoundError(f"report file not found: {path}")
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
            actual = [float(v) for v in payload["forecast"]["test_actual_normalized"]]
            predicted = [float(v) for v in payload["forecast"]["test_predicted_normalized"]]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise MalformedReportError(f"{path}: not a training report: {exc}")
    else:
        rows = [r for r in read_forecast_csv(forecast_path) if r["actual"] is not None]
        actual = [r["actual"] for r in rows]
        predicted = [r["predicted"] for r in rows]
    if not actual:
        raise MalformedReportError("no (actual, predicted) pairs to plot")

    plot_dir = Path(out_dir) / "plot"
    plot_dir.mkdir(parents=True, exist_ok=True)
    with (plot_dir / "actual_vs_predicted.csv").open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema: {PLOT_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(["actual", "predicted"])
        for a, p in zip(actual, predicted):
            writer.writerow([repr(a), repr(p)])
    write_chart_svg(actual, predicted, plot_dir / "chart.svg")
    print(f"plot data for {len(actual)} points in {plot_dir}")
    return 0


def _add_trace_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", help="trace/series CSV file")
    parser.add_argument("--timestamp-col", dest="timestamp_col", help="timestamp column name or index")
    parser.add_argument("--value-col", dest="value_col", help="value column name or index")
    parser.add_argument("--delimiter", help="CSV delimiter (default ,)")
    parser.add_argument("--no-header", action="store_true", help="file has no header row")
    parser.add_argument("--pi-minutes", dest="pi_minutes", type=int, help="prediction interval in minutes")


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--window", type=int, help="input window size")
    parser.add_argument("--population", type=int, help="population size")
    parser.add_argument("--generations", type=int, help="training generations")
    parser.add_argument("--train-frac", dest="train_frac", type=float, help="training fraction in (0,1)")
    parser.add_argument("--seed", type=int, help="base random seed")
    parser.add_argument("--hidden-min", dest="hidden_min", type=int, help="minimum hidden width")
    parser.add_argument("--hidden-max", dest="hidden_max", type=int, help="maximum hidden width")
    parser.add_argument("--depth-min", dest="depth_min", type=int, help="minimum hidden depth")
    parser.add_argument("--depth-max", dest="depth_max", type=int, help="maximum hidden depth")
    parser.add_argument("--metrics", help="comma list from rmse,mae,mape")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qevo",
        description="Evolutionary qubit-network forecasting for resource-usage traces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a forecaster on a trace")
    _add_trace_flags(p_train)
    _add_train_flags(p_train)
    p_train.add_argument("--ablate-mode", dest="mode", choices=[m.value for m in evolve.TrainingMode],
                         help="training mode (default full)")
    p_train.add_argument("--out-dir", dest="out_dir", help="output directory")
    p_train.add_argument("--config", help="flat key=value config file")
    p_train.add_argument("--checkpoint-dir", dest="checkpoint_dir", help="write per-generation checkpoints here")

    p_predict = sub.add_parser("predict", help="forecast a series with a trained genome")
    _add_trace_flags(p_predict)
    p_predict.add_argument("--genome", help="trained genome file")
    p_predict.add_argument("--window", type=int, help="expected window size (checked against genome)")
    p_predict.add_argument("--out-dir", dest="out_dir", help="output directory")
    p_predict.add_argument("--config", help="flat key=value config file")

    p_ablate = sub.add_parser("ablate", help="run full/fixed-arch/fixed-all over several seeds")
    _add_trace_flags(p_ablate)
    _add_train_flags(p_ablate)
    p_ablate.add_argument("--seeds", type=int, help="number of consecutive seeds (default 5)")
    p_ablate.add_argument("--out-dir", dest="out_dir", help="output directory")
    p_ablate.add_argument("--config", help="flat key=value config file")

    p_plot = sub.add_parser("plot-data", help="emit plot-ready CSV and a simple SVG chart")
    p_plot.add_argument("--forecast", help="forecast.csv from train/predict")
    p_plot.add_argument("--report", help="report.json from train")
    p_plot.add_argument("--out-dir", dest="out_dir", default="out", help="output directory")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(_merge_config(args), checkpoint_dir=args.checkpoint_dir)
        if args.command == "predict":
            return cmd_predict(_merge_config(args), explicit_window=args.window)
        if args.command == "ablate":
            return cmd_ablate(_merge_config(args))
        if args.command == "plot-data":
            if not args.forecast and not args.report:
                raise InputError("plot-data needs --forecast or --report")
            return cmd_plot_data(args.forecast, args.report, args.out_dir)
        parser.error(f"unknown command {args.command}")
    except (FileNotFoundError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    except QevoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
