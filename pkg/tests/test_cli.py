import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from qevo import network
from qevo.cli import main, read_forecast_csv

from conftest import positive_trace, write_trace_csv


def train_args(trace, out_dir, **overrides):
    options = {
        "--input": str(trace),
        "--pi-minutes": "1",
        "--window": "5",
        "--population": "6",
        "--generations": "3",
        "--train-frac": "0.6",
        "--seed": "7",
        "--hidden-min": "3",
        "--hidden-max": "5",
        "--depth-min": "1",
        "--depth-max": "2",
        "--out-dir": str(out_dir),
    }
    options.update(overrides)
    args = ["train"]
    for key, value in options.items():
        if value is not None:
            args += [key, value]
    return args


def test_train_end_to_end(trace_file, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(train_args(trace_file, out)) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["schema"] == "qevo.report/1"
    trajectory = report["training"]["fitness_trajectory"]
    assert len(trajectory) == 4
    assert all(b <= a for a, b in zip(trajectory, trajectory[1:]))
    assert report["metrics"]["test"]["rmse"] >= 0.0
    genome = network.load_genome(out / "genome.bin")
    assert genome.architecture.input_width == 5
    rows = read_forecast_csv(out / "forecast.csv")
    # one row per window target plus the extrapolated future row
    assert rows[-1]["split"] == "future" and rows[-1]["actual"] is None
    assert len(rows) == len(report["forecast"]["test_actual_normalized"]) + sum(
        1 for r in rows if r["split"] == "train"
    ) + 1


def test_train_missing_input(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    code = main(train_args(missing, tmp_path / "out"))
    assert code == 2
    assert str(missing) in capsys.readouterr().err


def test_train_constant_series_is_domain_error(tmp_path, capsys):
    trace = tmp_path / "const.csv"
    write_trace_csv(trace, np.full(40, 5.0))
    assert main(train_args(trace, tmp_path / "out")) == 1
    assert "constant" in capsys.readouterr().err


def test_train_series_too_short(tmp_path, capsys):
    trace = tmp_path / "short.csv"
    write_trace_csv(trace, positive_trace(0, points=5))
    assert main(train_args(trace, tmp_path / "out")) == 1


def test_train_deterministic_artifacts(trace_file, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(train_args(trace_file, out_a)) == 0
    assert main(train_args(trace_file, out_b)) == 0
    for name in ("report.json", "forecast.csv", "genome.bin"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_train_threads_env_does_not_change_artifacts(trace_file, tmp_path, monkeypatch):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    monkeypatch.setenv("QEVO_THREADS", "1")
    assert main(train_args(trace_file, out_a)) == 0
    monkeypatch.setenv("QEVO_THREADS", "3")
    assert main(train_args(trace_file, out_b)) == 0
    for name in ("report.json", "forecast.csv", "genome.bin"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_predict_matches_training_fits(trace_file, tmp_path):
    out = tmp_path / "run"
    assert main(train_args(trace_file, out)) == 0
    out2 = tmp_path / "pred"
    code = main(
        [
            "predict",
            "--genome", str(out / "genome.bin"),
            "--input", str(trace_file),
            "--pi-minutes", "1",
            "--out-dir", str(out2),
        ]
    )
    assert code == 0
    trained = read_forecast_csv(out / "forecast.csv")
    predicted = read_forecast_csv(out2 / "forecast.csv")
    assert len(trained) == len(predicted)
    for a, b in zip(trained, predicted):
        assert a["index"] == b["index"]
        assert b["predicted"] == pytest.approx(a["predicted"], abs=1e-12)
    report = json.loads((out / "report.json").read_text())
    test_norm = report["forecast"]["test_predicted_normalized"]
    # the test-split tail of the predictions equals the report's recorded fits
    tail = [r["predicted"] for r in predicted if r["split"] == "series"][-len(test_norm):]
    d_min = report["normalization"]["d_min"]
    d_max = report["normalization"]["d_max"]
    for recorded, value in zip(test_norm, tail):
        assert value == pytest.approx(recorded * (d_max - d_min) + d_min, abs=1e-12)


def test_predict_window_mismatch(trace_file, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(train_args(trace_file, out)) == 0
    code = main(
        [
            "predict",
            "--genome", str(out / "genome.bin"),
            "--input", str(trace_file),
            "--pi-minutes", "1",
            "--window", "7",
            "--out-dir", str(tmp_path / "pred"),
        ]
    )
    assert code == 1
    assert "window" in capsys.readouterr().err


def test_predict_series_too_short(trace_file, tmp_path):
    out = tmp_path / "run"
    assert main(train_args(trace_file, out)) == 0
    short = tmp_path / "short.csv"
    write_trace_csv(short, positive_trace(1, points=4))
    code = main(
        [
            "predict",
            "--genome", str(out / "genome.bin"),
            "--input", str(short),
            "--pi-minutes", "1",
            "--out-dir", str(tmp_path / "pred"),
        ]
    )
    assert code == 1


def test_plot_data_from_forecast(trace_file, tmp_path):
    out = tmp_path / "run"
    assert main(train_args(trace_file, out)) == 0
    assert main(["plot-data", "--forecast", str(out / "forecast.csv"), "--out-dir", str(out)]) == 0
    pairs = [
        ln
        for ln in (out / "plot" / "actual_vs_predicted.csv").read_text().strip().splitlines()
        if not ln.startswith("#")
    ]
    rows = read_forecast_csv(out / "forecast.csv")
    assert len(pairs) - 1 == sum(1 for r in rows if r["actual"] is not None)
    svg = ET.parse(out / "plot" / "chart.svg")  # well-formed XML
    assert svg.getroot().tag.endswith("svg")


def test_plot_data_from_report(trace_file, tmp_path):
    out = tmp_path / "run"
    assert main(train_args(trace_file, out)) == 0
    assert main(["plot-data", "--report", str(out / "report.json"), "--out-dir", str(out)]) == 0
    assert (out / "plot" / "chart.svg").exists()


def test_plot_data_empty_forecast(tmp_path, capsys):
    empty = tmp_path / "forecast.csv"
    empty.write_text("# schema: qevo.forecast/1\nindex,split,actual,predicted,actual_normalized,predicted_normalized\n")
    code = main(["plot-data", "--forecast", str(empty), "--out-dir", str(tmp_path)])
    assert code == 2
    assert "plot" in capsys.readouterr().err


def test_ablate_runs_all_modes(trace_file, tmp_path):
    out = tmp_path / "ablation"
    code = main(
        [
            "ablate",
            "--input", str(trace_file),
            "--pi-minutes", "1",
            "--window", "5",
            "--population", "6",
            "--generations", "2",
            "--train-frac", "0.6",
            "--seed", "3",
            "--seeds", "2",
            "--hidden-min", "3",
            "--hidden-max", "4",
            "--depth-min", "1",
            "--depth-max", "2",
            "--out-dir", str(out),
        ]
    )
    assert code == 0
    payload = json.loads((out / "ablation.json").read_text())
    assert payload["schema"] == "qevo.ablation/1"
    assert len(payload["runs"]) == 6  # 3 modes x 2 seeds
    assert set(payload["medians"]) == {"full", "fixed-arch", "fixed-all"}
    csv_lines = (out / "ablation.csv").read_text().strip().splitlines()
    assert len(csv_lines) == 2 + 6  # schema comment + header + rows


def test_config_file_with_flag_override(trace_file, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "\n".join(
            [
                "# training settings",
                f"input = {trace_file}",
                "pi_minutes = 1",
                "window = 5",
                "population = 6",
                "generations = 2",
                "train_frac = 0.6",
                "seed = 1",
                "hidden_min = 3",
                "hidden_max = 4",
                "depth_min = 1",
                "depth_max = 1",
            ]
        )
    )
    out = tmp_path / "out"
    assert main(["train", "--config", str(cfg), "--seed", "2", "--out-dir", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["run"]["seed"] == 2  # flag wins
    assert report["run"]["window"] == 5  # file value honored


def test_config_file_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("no_such_key = 1\n")
    code = main(["train", "--config", str(cfg), "--out-dir", str(tmp_path)])
    assert code == 2
    assert "no_such_key" in capsys.readouterr().err


def test_bad_threads_env(trace_file, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("QEVO_THREADS", "zero")
    assert main(train_args(trace_file, tmp_path / "out")) == 2
