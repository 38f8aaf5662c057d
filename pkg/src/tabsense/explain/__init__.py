"""Per-sample local explanations: LIME and Kernel SHAP."""
from __future__ import annotations

import numpy as np

from ..data import EncodedDataset
from ..models import TrainedModel
from .limex import LimeConfig, lime_attributions
from .shapx import ShapConfig, kernel_shap, sample_background, coalition_values
from .space import (
    ExplainError,
    ExplanationEntry,
    ExplanationSpace,
    LocalExplanation,
    SpaceFeature,
    build_numeric_space,
    build_space,
    explanation_payload,
    original_row,
)

__all__ = [
    "ExplainError",
    "ExplanationEntry",
    "ExplanationSpace",
    "LimeConfig",
    "LocalExplanation",
    "ShapConfig",
    "SpaceFeature",
    "build_numeric_space",
    "build_space",
    "coalition_values",
    "explanation_payload",
    "kernel_shap",
    "lime_attributions",
    "lime_explain",
    "original_row",
    "sample_background",
    "shap_explain",
]


def _resolve_sample(dataset: EncodedDataset, split: str, sample_index: int) -> int:
    rows = np.flatnonzero(dataset.split_mask(split))
    if sample_index < 0 or sample_index >= rows.size:
        raise ExplainError(
            f"sample {sample_index} out of range for split {split!r} "
            f"(valid range 0..{rows.size - 1})"
        )
    return int(rows[sample_index])


def _target_and_labels(model, dataset, prediction, class_index):
    """Pick the explained output column and human-readable labels."""
    out_names = dataset.outputs.column_names
    if dataset.task == "classification":
        if class_index is None:
            class_index = int(np.argmax(prediction))
        if not 0 <= class_index < len(out_names):
            raise ExplainError(f"class index {class_index} out of range")
        label = out_names[class_index].split("=", 1)[1]
        return class_index, out_names[class_index], label
    class_index = class_index or 0
    if not 0 <= class_index < len(out_names):
        raise ExplainError(f"output index {class_index} out of range")
    return class_index, out_names[class_index], None


def _ground_truth(dataset: EncodedDataset, row: int, target: int):
    y = dataset.outputs.values[row]
    if dataset.task == "classification":
        name = dataset.outputs.column_names[int(np.argmax(y))]
        return name.split("=", 1)[1]
    return float(y[target])


def _entry_values(feat: SpaceFeature, value: float):
    return feat.display(value, normalized=False), feat.display(value, normalized=True)


def lime_explain(
    model: TrainedModel,
    dataset: EncodedDataset,
    space: ExplanationSpace,
    split: str,
    sample_index: int,
    config: LimeConfig | None = None,
    class_index: int | None = None,
) -> LocalExplanation:
    """Surrogate-model explanation of one sample with decision thresholds.

    Classification explains the predicted class's probability unless
    ``class_index`` overrides it.
    """
    config = config or LimeConfig()
    row = _resolve_sample(dataset, split, sample_index)
    instance = _instance_from_space(space, dataset, row)
    prediction = model.predict_values(dataset.inputs.values[row : row + 1])[0]
    target, target_name, predicted_label = _target_and_labels(
        model, dataset, prediction, class_index
    )

    def model_fn(encoded):
        return model.predict_values(encoded)[:, target]

    coefs, bins, warnings = lime_attributions(space, instance, model_fn, config)
    k = min(config.num_features, space.d)
    order = np.argsort(-np.abs(coefs), kind="stable")[:k]
    entries = []
    for j in order:
        feat = space.features[int(j)]
        raw, norm = _entry_values(feat, instance[int(j)])
        lo = hi = None
        category = None
        if feat.kind == "categorical":
            category = feat.categories[int(instance[int(j)])]
        else:
            b = int(bins[int(j)].bin_of(instance[int(j)]))
            blo, bhi = bins[int(j)].bounds(b)
            lo = None if np.isneginf(blo) else float(blo)
            hi = None if np.isposinf(bhi) else float(bhi)
        attr = float(coefs[int(j)])
        entries.append(
            ExplanationEntry(
                feature=feat.name,
                attribution=attr,
                direction="positive" if attr >= 0 else "negative",
                value_raw=raw,
                value_normalized=norm,
                threshold_low=lo,
                threshold_high=hi,
                category=category,
            )
        )

    probabilities = None
    if dataset.task == "classification":
        labels = [n.split("=", 1)[1] for n in dataset.outputs.column_names]
        probabilities = {lab: float(p) for lab, p in zip(labels, prediction)}
    return LocalExplanation(
        method="lime",
        split=split,
        sample_index=sample_index,
        prediction=[float(p) for p in prediction],
        predicted_label=predicted_label if predicted_label is not None else float(prediction[target]),
        ground_truth=_ground_truth(dataset, row, target),
        target_output=target_name,
        entries=tuple(entries),
        prediction_probabilities=probabilities,
        warnings=tuple(warnings),
    )


def shap_explain(
    model: TrainedModel,
    dataset: EncodedDataset,
    space: ExplanationSpace,
    split: str,
    sample_index: int,
    config: ShapConfig | None = None,
    class_index: int | None = None,
) -> LocalExplanation:
    """Kernel SHAP attributions for one sample (exact when few features)."""
    config = config or ShapConfig()
    row = _resolve_sample(dataset, split, sample_index)
    instance = _instance_from_space(space, dataset, row)
    prediction = model.predict_values(dataset.inputs.values[row : row + 1])[0]
    target, target_name, predicted_label = _target_and_labels(
        model, dataset, prediction, class_index
    )

    def model_fn(encoded):
        return model.predict_values(encoded)[:, target]

    phi, base, exact = kernel_shap(space, instance, model_fn, config)
    entries = []
    for j, feat in enumerate(space.features):
        raw, norm = _entry_values(feat, instance[j])
        entries.append(
            ExplanationEntry(
                feature=feat.name,
                attribution=float(phi[j]),
                direction="positive" if phi[j] >= 0 else "negative",
                value_raw=raw,
                value_normalized=norm,
                category=feat.categories[int(instance[j])] if feat.kind == "categorical" else None,
            )
        )
    return LocalExplanation(
        method="shap",
        split=split,
        sample_index=sample_index,
        prediction=[float(p) for p in prediction],
        predicted_label=predicted_label if predicted_label is not None else float(prediction[target]),
        ground_truth=_ground_truth(dataset, row, target),
        target_output=target_name,
        entries=tuple(entries),
        base_value=float(base),
        warnings=() if exact else ("sampling mode: attributions are estimates",),
    )


def _instance_from_space(space: ExplanationSpace, dataset: EncodedDataset, row: int) -> np.ndarray:
    """Recover the original-space feature vector of one encoded row."""
    enc = dataset.inputs.values[row]
    out = np.empty(space.d)
    for j, (feat, (start, width)) in enumerate(zip(space.features, space.feature_slots)):
        if feat.kind == "categorical":
            out[j] = float(np.argmax(enc[start : start + width]))
        else:
            out[j] = enc[start]
    return out
