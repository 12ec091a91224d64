import logging

import numpy as np
import pandas as pd

from wnsf.core.dataset import split_index
from wnsf.core.model import StateSpaceModel, impulse_response
from wnsf.exceptions import DegenerateSignalError, SingularMatrixError

logger = logging.getLogger("wnsf.metrics")


def fit_score(truth, estimate) -> float:
    """100 (1 - ||g - g_hat|| / ||g - mean(g)||), the mean taken per channel over the first axis."""
    truth = np.asarray(truth, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if truth.shape != estimate.shape:
        raise ValueError(f"shapes differ: {truth.shape} vs {estimate.shape}")
    spread = np.linalg.norm(truth - truth.mean(axis=0))
    if spread == 0.0:
        raise DegenerateSignalError("FIT undefined: the true response is constant")
    return float(100.0 * (1.0 - np.linalg.norm(truth - estimate) / spread))


def fit_impulse(true_model: StateSpaceModel, est_model: StateSpaceModel, horizon: int,
                path: str = "input") -> float:
    """FIT between impulse responses; path="noise" scores the K path instead of the B path."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    return fit_score(impulse_response(true_model, horizon, path), impulse_response(est_model, horizon, path))


def _segment_error(y, y_hat) -> float:
    spread = np.sum((y - y.mean(axis=0)) ** 2)
    if spread == 0.0:
        raise DegenerateSignalError("error undefined: segment output is constant")
    return float(np.sqrt(np.sum((y - y_hat) ** 2) / spread))


def id_val_errors(y_true, y_pred, split: float = 0.7) -> tuple[float, float]:
    """Normalized errors on the identification part and the validation part of a record."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.ndim == 1:
        y_true, y_pred = y_true[:, None], y_pred.reshape(-1, 1)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"shapes differ: {y_true.shape} vs {y_pred.shape}")
    cut = split_index(y_true.shape[0], split)
    return _segment_error(y_true[:cut], y_pred[:cut]), _segment_error(y_true[cut:], y_pred[cut:])


def mse_vs_crlb(estimates, truth, information, sigma_e2: float, N: int,
                labels: list[str] | None = None, indices=None) -> pd.DataFrame:
    """Per-parameter sample MSE against the bound sigma_e2 (M_CR^{-1})_ii / N.

    With `indices` the estimates cover only those parameters of the full
    M_CR; their bound still comes from the full inverse.
    """
    estimates = np.atleast_2d(np.asarray(estimates, dtype=float))
    truth = np.asarray(truth, dtype=float).reshape(-1)
    if estimates.shape[0] < 2:
        raise ValueError("need at least two trials")
    if estimates.shape[1] != truth.size:
        raise ValueError("estimates and truth disagree on the parameter count")
    information = np.asarray(information, dtype=float)
    condition = float(np.linalg.cond(information))
    if not np.isfinite(condition) or condition > 1e14:
        raise SingularMatrixError("M_CR is singular", condition_number=condition)
    inverse = np.linalg.inv(information)

    indices = np.arange(information.shape[0]) if indices is None else np.asarray(indices, dtype=int)
    if indices.size != truth.size:
        raise ValueError("indices and truth disagree on the parameter count")
    mse = np.mean((estimates - truth) ** 2, axis=0)
    bound = sigma_e2 * np.diag(inverse)[indices] / N
    labels = labels or [f"theta{i + 1}" for i in indices]
    return pd.DataFrame({"parameter": labels, "mse": mse, "crlb": bound, "ratio": mse / bound})
