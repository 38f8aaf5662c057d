"""Evaluate registered models on a split under one loss and pick the best.

Only models with the session's feature fingerprint are comparable; others
are excluded and reported. The best model has the minimal error, ties
broken by registration order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import EncodedDataset
from .losses import LossError, compute_loss, task_for_loss
from .models import FeatureFingerprint, TrainedModel


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class EvaluationReport:
    split: str
    loss: str
    entries: tuple[tuple[str, float], ...]  # (model_id, error), registration order
    best_model_id: str
    excluded: tuple[tuple[str, str], ...]  # (model_id, reason)

    def to_dict(self) -> dict:
        return {
            "split": self.split,
            "loss": self.loss,
            "entries": [{"model_id": m, "error": e} for m, e in self.entries],
            "best_model_id": self.best_model_id,
            "excluded": [{"model_id": m, "reason": r} for m, r in self.excluded],
        }


def _loss_inputs(loss: str, predictions: np.ndarray, targets: np.ndarray):
    if loss == "nll":
        return np.log(np.clip(predictions, 1e-12, None)), targets
    return predictions, targets


def evaluate_all(
    models: list[tuple[str, TrainedModel]],
    dataset: EncodedDataset,
    fingerprint: FeatureFingerprint,
    split: str,
    loss: str,
) -> EvaluationReport:
    """Error of every comparable model on the chosen split under ``loss``."""
    if not models:
        raise EvaluationError("no trained models to evaluate")
    if task_for_loss(loss) != dataset.task:
        raise EvaluationError(
            f"loss {loss!r} applies to {task_for_loss(loss)} but the session task "
            f"is {dataset.task}"
        )
    mask = dataset.split_mask(split)
    if not mask.any():
        raise EvaluationError(f"split {split!r} is empty")
    X = dataset.inputs.values[mask]
    Y = dataset.outputs.values[mask]

    entries: list[tuple[str, float]] = []
    excluded: list[tuple[str, str]] = []
    for model_id, model in models:
        if model.fingerprint != fingerprint:
            excluded.append((model_id, "feature fingerprint differs"))
            continue
        pred = model.predict_values(X)
        try:
            err = compute_loss(loss, *_loss_inputs(loss, pred, Y))
        except LossError as e:
            raise EvaluationError(str(e)) from e
        entries.append((model_id, float(err)))
    if not entries:
        raise EvaluationError("no models share the current feature fingerprint")
    best = min(entries, key=lambda t: t[1])[0]  # min is stable: first wins ties
    return EvaluationReport(split, loss, tuple(entries), best, tuple(excluded))


def plot_series(
    model: TrainedModel,
    dataset: EncodedDataset,
    split: str,
    output: str,
    sort: str = "none",
) -> dict:
    """Paired ground-truth/prediction arrays for one output, optionally
    sorted (stably) by ground truth or prediction; indices map each point
    back to its position in the split."""
    if sort not in ("none", "ground_truth", "prediction"):
        raise EvaluationError(f"unknown sort mode {sort!r}")
    gt, pred, labels = _series_values(model, dataset, split, output)
    idx = np.arange(gt.shape[0])
    if sort == "ground_truth":
        idx = np.argsort(gt, kind="stable")
    elif sort == "prediction":
        idx = np.argsort(pred, kind="stable")
    payload = {
        "output": output,
        "split": split,
        "sort": sort,
        "ground_truth": gt[idx].tolist(),
        "prediction": pred[idx].tolist(),
        "indices": idx.tolist(),
    }
    if labels is not None:
        payload["categories"] = labels
    return payload


def _series_values(model, dataset: EncodedDataset, split, output):
    mask = dataset.split_mask(split)
    if not mask.any():
        raise EvaluationError(f"split {split!r} is empty")
    X = dataset.inputs.values[mask]
    Y = dataset.outputs.values[mask]
    pred = model.predict_values(X)
    groups = dataset.outputs.groups()
    if output not in groups:
        raise EvaluationError(f"unknown output feature {output!r}")
    cols = groups[output]
    if dataset.task == "classification":
        gt = Y[:, cols].argmax(axis=1).astype(np.float64)
        pv = pred[:, cols].argmax(axis=1).astype(np.float64)
        labels = [dataset.outputs.column_names[c].split("=", 1)[1] for c in cols]
        return gt, pv, labels
    return Y[:, cols[0]], pred[:, cols[0]], None


def plot_goodness_of_fit(
    model: TrainedModel,
    dataset: EncodedDataset,
    split: str,
    output: str,
) -> dict:
    """Prediction vs ground truth scatter with 3-sigma residual outliers.

    Regression only; the diagonal is the optimal fit.
    """
    if dataset.task != "regression":
        raise EvaluationError("goodness-of-fit view applies to regression mode only")
    gt, pred, _ = _series_values(model, dataset, split, output)
    residuals = pred - gt
    sigma = float(residuals.std())
    outliers = np.abs(residuals) > 3.0 * sigma
    return {
        "output": output,
        "split": split,
        "prediction": pred.tolist(),
        "ground_truth": gt.tolist(),
        "outliers": outliers.tolist(),
        "residual_std": sigma,
    }
