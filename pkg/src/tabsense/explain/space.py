"""Feature space shared by the local explainers.

Explanations are computed over the *selected input features* (not their
one-hot expansion): perturbing or toggling "sex" means switching its
category, which then re-encodes into the columns the model consumes.
When PCA preprocessing replaces the inputs the space is simply the
principal-component columns.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import DataTable, EncodedDataset, NormalizationParams


class ExplainError(ValueError):
    pass


@dataclass(frozen=True)
class SpaceFeature:
    name: str
    kind: str  # 'numeric' | 'categorical'
    categories: tuple[str, ...] = ()
    # affine rendering into normalized display space (numeric only)
    norm_offset: float = 0.0
    norm_scale: float = 1.0

    def display(self, value: float, normalized: bool) -> float | str:
        if self.kind == "categorical":
            return self.categories[int(value)]
        if normalized and self.norm_scale > 0:
            return float((value - self.norm_offset) / self.norm_scale)
        if normalized:
            return 0.0
        return float(value)


class ExplanationSpace:
    """Original-space training data plus the mapping into model inputs."""

    def __init__(
        self,
        features: list[SpaceFeature],
        train_values: np.ndarray,
        encoded_column_names: tuple[str, ...],
    ):
        self.features = features
        self.train_values = train_values
        self.encoded_column_names = encoded_column_names
        self.feature_slots: list[tuple[int, int]] = []  # (enc start, n cols) per feature
        pos = 0
        for f in features:
            width = len(f.categories) if f.kind == "categorical" else 1
            self.feature_slots.append((pos, width))
            pos += width
        if pos != len(encoded_column_names):
            raise ExplainError("feature widths do not cover the encoded columns")

    @property
    def d(self) -> int:
        return len(self.features)

    def encode_rows(self, rows: np.ndarray) -> np.ndarray:
        """Map (n, d) original-space rows to the model's encoded columns."""
        n = rows.shape[0]
        out = np.zeros((n, len(self.encoded_column_names)), dtype=np.float64)
        for j, (f, (start, width)) in enumerate(zip(self.features, self.feature_slots)):
            if f.kind == "categorical":
                idx = rows[:, j].astype(np.int64)
                out[np.arange(n), start + idx] = 1.0
            else:
                out[:, start] = rows[:, j]
        return out


def build_space(
    table: DataTable,
    dataset: EncodedDataset,
    normalization: NormalizationParams | None = None,
) -> ExplanationSpace:
    """Space over the table's selected input features (no PCA)."""
    specs = table.features_with_role("input")
    train_rows = dataset.kept_rows[dataset.split_mask("train")]
    cols = []
    features = []
    groups = dataset.inputs.groups()
    for spec in specs:
        col = table.columns[spec.name][train_rows].astype(np.float64)
        cols.append(col)
        offset, scale = 0.0, 1.0
        if spec.kind == "numeric" and normalization is not None:
            enc_idx = groups[spec.name][0]
            offset = float(normalization.offset[enc_idx])
            scale = float(normalization.scale[enc_idx])
        features.append(
            SpaceFeature(spec.name, spec.kind, spec.categories, offset, scale)
        )
    return ExplanationSpace(
        features, np.column_stack(cols), dataset.inputs.column_names
    )


def build_numeric_space(
    column_names: tuple[str, ...],
    train_values: np.ndarray,
    normalization: NormalizationParams | None = None,
) -> ExplanationSpace:
    """Space where every model input is already a numeric column (PCA case)."""
    features = []
    for j, name in enumerate(column_names):
        offset, scale = 0.0, 1.0
        if normalization is not None:
            offset = float(normalization.offset[j])
            scale = float(normalization.scale[j])
        features.append(SpaceFeature(name, "numeric", (), offset, scale))
    return ExplanationSpace(features, train_values, column_names)


def original_row(table: DataTable, dataset: EncodedDataset, row: int) -> np.ndarray:
    """One kept row in original space (category indices for categoricals)."""
    specs = table.features_with_role("input")
    src = dataset.kept_rows[row]
    return np.array([float(table.columns[s.name][src]) for s in specs])


@dataclass(frozen=True)
class ExplanationEntry:
    feature: str
    attribution: float
    direction: str  # 'positive' | 'negative'
    value_raw: float | str
    value_normalized: float | str
    threshold_low: float | None = None  # lime, numeric features only
    threshold_high: float | None = None
    category: str | None = None  # lime, categorical features

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "attribution": self.attribution,
            "direction": self.direction,
            "value_raw": self.value_raw,
            "value_normalized": self.value_normalized,
            "threshold_low": self.threshold_low,
            "threshold_high": self.threshold_high,
            "category": self.category,
        }


@dataclass(frozen=True)
class LocalExplanation:
    method: str  # 'lime' | 'shap'
    split: str
    sample_index: int
    prediction: list[float]
    predicted_label: str | float
    ground_truth: str | float
    target_output: str
    entries: tuple[ExplanationEntry, ...]
    base_value: float | None = None  # shap: background mean prediction
    prediction_probabilities: dict | None = None  # lime classification
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "split": self.split,
            "sample_index": self.sample_index,
            "prediction": self.prediction,
            "predicted_label": self.predicted_label,
            "ground_truth": self.ground_truth,
            "target_output": self.target_output,
            "entries": [e.to_dict() for e in self.entries],
            "base_value": self.base_value,
            "prediction_probabilities": self.prediction_probabilities,
            "warnings": list(self.warnings),
        }


def explanation_payload(expl: LocalExplanation, normalized: bool) -> dict:
    """Wire payload with feature values rendered in the requested space.

    The toggle changes displayed values only; attributions are untouched.
    """
    doc = expl.to_dict()
    doc["normalized"] = bool(normalized)
    for entry in doc["entries"]:
        entry["value"] = entry["value_normalized"] if normalized else entry["value_raw"]
    return doc
