"""Forecast error metrics: RMSE (the training fitness), MAE, MAPE.

All metrics are computed on the normalized scale; MAPE is reported as a
fraction and guards zero actuals with an epsilon denominator instead of
silently dropping points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, LengthMismatchError


@dataclass(frozen=True)
class EvaluationResult:
    rmse: float
    mae: float
    mape: float
    count: int

    def to_dict(self) -> dict:
        return {"rmse": self.rmse, "mae": self.mae, "mape": self.mape, "count": self.count}


def _pair(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape:
        raise LengthMismatchError(f"actual {a.shape} vs predicted {p.shape}")
    if a.size == 0:
        raise EmptyInputError("metrics need at least one point")
    return a.ravel(), p.ravel()


def rmse(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return float(np.sqrt(np.mean(np.square(a - p))))


def mae(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return float(np.mean(np.abs(a - p)))


def mape(actual, predicted, epsilon: float = 1e-8) -> float:
    """Mean absolute fractional error with |actual| floored at epsilon."""
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    a, p = _pair(actual, predicted)
    return float(np.mean(np.abs(a - p) / np.maximum(np.abs(a), epsilon)))


def evaluate(actual, predicted, epsilon: float = 1e-8) -> EvaluationResult:
    a, p = _pair(actual, predicted)
    return EvaluationResult(
        rmse=rmse(a, p), mae=mae(a, p), mape=mape(a, p, epsilon), count=int(a.size)
    )
