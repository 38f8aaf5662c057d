"""Scalar error metrics over prediction/target arrays.

Regression kinds operate on real-valued arrays of matching shape; with
multiple output columns the loss is the mean over outputs, then samples.
Classification kinds consume probability rows (or log-probabilities for
``nll``) against one-hot or integer-label targets. Margin losses are
restricted to binary tasks: they reduce the positive-class probability p
to a decision value f = 2p - 1 and map targets to y in {-1, +1}.
"""
from __future__ import annotations

import numpy as np

EPS = 1e-12

REGRESSION_LOSSES = ("mae", "mse", "rmse", "msle", "rmsle", "log_cosh")
CLASSIFICATION_LOSSES = (
    "hinge",
    "smoothed_hinge",
    "squared_hinge",
    "modified_huber",
    "ramp",
    "cross_entropy",
    "binary_cross_entropy",
    "nll",
)
MARGIN_LOSSES = ("hinge", "smoothed_hinge", "squared_hinge", "modified_huber", "ramp")
ALL_LOSSES = REGRESSION_LOSSES + CLASSIFICATION_LOSSES


class LossError(ValueError):
    """Invalid loss kind, shape mismatch, or domain violation."""


def _as_2d(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise LossError(f"expected 1-d or 2-d array, got shape {arr.shape}")
    return arr


def _check_pair(predictions, targets):
    p = _as_2d(predictions)
    t = _as_2d(targets)
    if p.shape != t.shape:
        raise LossError(f"shape mismatch: predictions {p.shape} vs targets {t.shape}")
    if p.shape[0] < 1:
        raise LossError("need at least one sample")
    return p, t


def _margin_inputs(predictions, targets):
    """Reduce binary-classification inputs to (f, y) with f=2p-1, y in {-1,+1}."""
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.ndim == 2:
        if p.shape[1] == 1:
            p = p[:, 0]
        elif p.shape[1] == 2:
            p = p[:, 1]
        else:
            raise LossError("margin losses are restricted to binary tasks")
    if t.ndim == 2:
        if t.shape[1] == 1:
            t = t[:, 0]
        elif t.shape[1] == 2:
            t = t[:, 1]
        else:
            raise LossError("margin losses are restricted to binary tasks")
    if p.shape != t.shape:
        raise LossError(f"shape mismatch: predictions {p.shape} vs targets {t.shape}")
    if p.size < 1:
        raise LossError("need at least one sample")
    uniq = np.unique(t)
    if not np.all(np.isin(uniq, (-1.0, 0.0, 1.0))):
        raise LossError("margin-loss targets must be binary labels")
    y = np.where(t > 0, 1.0, -1.0)
    f = 2.0 * p - 1.0
    return f, y


def _true_class_prob(p: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Per-sample probability assigned to the true class (one-hot targets)."""
    row_sums = t.sum(axis=1)
    if not np.allclose(row_sums, 1.0, atol=1e-9):
        raise LossError("targets must be one-hot rows")
    idx = t.argmax(axis=1)
    return p[np.arange(p.shape[0]), idx]


def _check_probabilities(p: np.ndarray):
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise LossError("probability inputs must lie in [0, 1]")


def _log_cosh(z: np.ndarray) -> np.ndarray:
    # |z| + log((1 + exp(-2|z|)) / 2) avoids overflow of cosh for large z
    az = np.abs(z)
    return az + np.log1p(np.exp(-2.0 * az)) - np.log(2.0)


def compute_loss(kind: str, predictions, targets) -> float:
    """Mean-reduced loss of ``kind`` between predictions and targets.

    Raises LossError on unknown kind, length mismatch, or domain violation
    (e.g. msle with values <= -1, non-probability input to cross-entropy).
    """
    if kind in REGRESSION_LOSSES:
        p, t = _check_pair(predictions, targets)
        d = p - t
        if kind == "mae":
            return float(np.mean(np.abs(d)))
        if kind == "mse":
            return float(np.mean(d * d))
        if kind == "rmse":
            return float(np.sqrt(np.mean(d * d)))
        if kind in ("msle", "rmsle"):
            if np.any(p <= -1.0) or np.any(t <= -1.0):
                raise LossError("msle/rmsle require predictions and targets > -1")
            ld = np.log1p(p) - np.log1p(t)
            msle = float(np.mean(ld * ld))
            return msle if kind == "msle" else float(np.sqrt(msle))
        if kind == "log_cosh":
            return float(np.mean(_log_cosh(d)))

    if kind in MARGIN_LOSSES:
        f, y = _margin_inputs(predictions, targets)
        yf = y * f
        if kind == "hinge":
            return float(np.mean(np.maximum(0.0, 1.0 - yf)))
        if kind == "squared_hinge":
            return float(np.mean(np.maximum(0.0, 1.0 - yf) ** 2))
        if kind == "smoothed_hinge":
            vals = np.where(yf >= 1.0, 0.0, np.where(yf >= 0.0, 0.5 * (1.0 - yf) ** 2, 0.5 - yf))
            return float(np.mean(vals))
        if kind == "modified_huber":
            vals = np.where(yf >= -1.0, np.maximum(0.0, 1.0 - yf) ** 2, -4.0 * yf)
            return float(np.mean(vals))
        if kind == "ramp":
            return float(np.mean(np.clip(1.0 - yf, 0.0, 2.0)))

    if kind == "cross_entropy":
        p, t = _check_pair(predictions, targets)
        _check_probabilities(p)
        ptrue = np.clip(_true_class_prob(p, t), EPS, 1.0 - EPS)
        return float(np.mean(-np.log(ptrue)))

    if kind == "binary_cross_entropy":
        p, t = _check_pair(predictions, targets)
        _check_probabilities(p)
        pc = np.clip(p, EPS, 1.0 - EPS)
        per = -(t * np.log(pc) + (1.0 - t) * np.log(1.0 - pc))
        return float(np.mean(per))

    if kind == "nll":
        logp, t = _check_pair(predictions, targets)
        if np.any(logp > 1e-9):
            raise LossError("nll expects log-probabilities (values <= 0)")
        lptrue = _true_class_prob(logp, t)
        return float(np.mean(-lptrue))

    raise LossError(f"unknown loss kind: {kind!r}")


def task_for_loss(kind: str) -> str:
    """Which task ('regression' or 'classification') a loss kind applies to."""
    if kind in REGRESSION_LOSSES:
        return "regression"
    if kind in CLASSIFICATION_LOSSES:
        return "classification"
    raise LossError(f"unknown loss kind: {kind!r}")
