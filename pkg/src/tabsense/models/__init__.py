"""Native model families: random forest, gradient-boosted trees, MLP,
tabular ResNet, plus training dispatch and disk persistence."""
from __future__ import annotations

import numpy as np

from ..data import NormalizationParams
from .base import (
    FORMAT_VERSION,
    HYPERPARAMETER_DEFAULTS,
    MODEL_FAMILIES,
    TASKS,
    FeatureFingerprint,
    FeatureSpace,
    FingerprintMismatch,
    ModelError,
    ModelFileError,
    ModelSpec,
    TrainedModel,
    load_model,
    model_from_bytes,
    model_to_bytes,
    save_model,
    schema_hash,
)
from .boosting import GradientBoostedTreesModel, train_gradient_boosted_trees
from .forest import RandomForestModel, train_random_forest
from .network import (
    MlpModel,
    TabularResnetModel,
    check_model_gradients,
    gradient_check,
    train_network,
)

__all__ = [
    "FORMAT_VERSION",
    "HYPERPARAMETER_DEFAULTS",
    "MODEL_FAMILIES",
    "TASKS",
    "FeatureFingerprint",
    "FeatureSpace",
    "FingerprintMismatch",
    "GradientBoostedTreesModel",
    "MlpModel",
    "ModelError",
    "ModelFileError",
    "ModelSpec",
    "RandomForestModel",
    "TabularResnetModel",
    "TrainedModel",
    "check_model_gradients",
    "gradient_check",
    "load_model",
    "model_from_bytes",
    "model_to_bytes",
    "save_model",
    "schema_hash",
    "train",
    "train_network",
]


def train(
    spec: ModelSpec,
    train_inputs: np.ndarray,
    train_outputs: np.ndarray,
    fingerprint: FeatureFingerprint,
    normalization: NormalizationParams | None = None,
    feature_space: FeatureSpace | None = None,
    progress=None,
) -> TrainedModel:
    """Train one model per its spec on already-encoded train-split arrays.

    Tree families consume raw encoded data; network families train on
    normalized data (the given normalization, or an internal mean/std fit)
    and store the transform so prediction is uniform for the caller.
    """
    if spec.family == "random_forest":
        return train_random_forest(
            spec, train_inputs, train_outputs, fingerprint, feature_space, progress
        )
    if spec.family == "gradient_boosted_trees":
        return train_gradient_boosted_trees(
            spec, train_inputs, train_outputs, fingerprint, feature_space, progress
        )
    return train_network(
        spec, train_inputs, train_outputs, fingerprint, normalization, feature_space, progress
    )
