"""Accuracy metrics for predicted volatilities."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .precision import Precision

__all__ = ["ErrorReport", "compute_errors", "per_layer_mse"]


@dataclass
class ErrorReport:
    mae: float
    mse: float
    mre: float
    L: int
    precision: Precision | None = None
    per_layer_mse: np.ndarray | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["precision"] = None if self.precision is None else Precision.parse(self.precision).value
        if self.per_layer_mse is not None:
            d["per_layer_mse"] = [float(x) for x in self.per_layer_mse]
        return d

    def __str__(self) -> str:
        prec = f" ({Precision.parse(self.precision).value})" if self.precision else ""
        return f"L={self.L}{prec}  MAE={self.mae:.6e}  MSE={self.mse:.6e}  MRE={self.mre:.6e}"


def _check(pred, truth):
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape[-1:] != truth.shape or truth.ndim != 1:
        raise ValueError(f"length mismatch: predictions {pred.shape} vs truth {truth.shape}")
    if truth.shape[0] < 1:
        raise ValueError("need at least one element")
    if not np.all(truth > 0):
        raise ValueError("truth volatilities must be > 0 (MRE divides by them)")
    return pred, truth


def compute_errors(pred, truth, precision: Precision | str | None = None) -> ErrorReport:
    """MAE, MSE and MRE of ``pred`` against ``truth``, accumulated in float64."""
    pred, truth = _check(pred, truth)
    err = np.abs(pred - truth)
    return ErrorReport(
        mae=float(np.mean(err)),
        mse=float(np.mean(err * err)),
        mre=float(np.mean(err / truth)),
        L=int(truth.shape[0]),
        precision=None if precision is None else Precision.parse(precision),
    )


def per_layer_mse(trace, truth) -> np.ndarray:
    """MSE of every trace row (sigma after n layers) against ``truth``."""
    trace, truth = _check(trace, truth)
    if trace.ndim != 2:
        raise ValueError(f"trace must be 2-d (layers x L), got shape {trace.shape}")
    diff = trace - truth[None, :]
    return np.mean(diff * diff, axis=1)
