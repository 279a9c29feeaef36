import numpy as np
import pytest


def sine_series(seed: int, points: int = 2000, noise: float = 0.05) -> np.ndarray:
    """Noisy sine used by the desk-scale forecasting checks."""
    rng = np.random.default_rng(seed)
    t = np.arange(points)
    return 0.5 + 0.4 * np.sin(2 * np.pi * t / 48.0) + rng.normal(0.0, noise, points)


def positive_trace(seed: int, points: int = 300) -> np.ndarray:
    """Strictly positive synthetic usage values for trace-file round trips."""
    rng = np.random.default_rng(seed)
    t = np.arange(points)
    return 10.0 + 4.0 * np.sin(2 * np.pi * t / 48.0) + rng.normal(0.0, 0.5, points)


def write_trace_csv(path, values, step_seconds: int = 60, header: bool = True) -> None:
    lines = ["timestamp,value"] if header else []
    lines += [f"{i * step_seconds},{float(v)!r}" for i, v in enumerate(values)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


@pytest.fixture
def trace_file(tmp_path):
    path = tmp_path / "trace.csv"
    write_trace_csv(path, positive_trace(seed=0))
    return path
