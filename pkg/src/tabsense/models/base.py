"""Model specs, feature fingerprints, and the on-disk model container.

The model file is a self-describing JSON document: format_version,
fingerprint, spec, normalization parameters, learned parameters (numeric
arrays encoded as base64 of their raw bytes, so reloads are bit-exact),
and a whole-file checksum. No executable content.
"""
from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from ..data import EncodedMatrix, FeatureSpec, NormalizationParams

FORMAT_VERSION = 1

MODEL_FAMILIES = ("random_forest", "gradient_boosted_trees", "mlp", "tabular_resnet")
TASKS = ("regression", "classification")

HYPERPARAMETER_DEFAULTS: dict[str, dict] = {
    "random_forest": {
        "n_trees": 100,
        "bootstrap": True,
        "max_depth": 16,
        "features_per_split": None,  # None -> ceil(sqrt(d))
    },
    "gradient_boosted_trees": {
        "rounds": 100,
        "learning_rate": 0.1,
        "max_depth": 6,
        "reg_lambda": 1.0,
        "max_bins": 256,
    },
    "mlp": {
        "hidden_layers": [64, 32],
        "dropout": 0.0,
        "learning_rate": 1e-3,
        "batch_size": 64,
        "epochs": 25,
    },
    "tabular_resnet": {
        "blocks": 2,
        "layer_size": 64,
        "dropout": 0.0,
        "learning_rate": 1e-3,
        "batch_size": 64,
        "epochs": 25,
    },
}


class ModelError(ValueError):
    """Invalid model specification or training input."""


class FingerprintMismatch(ModelError):
    """Inputs do not match the feature set the model was trained on."""


class ModelFileError(ValueError):
    """Unreadable, corrupted, or incompatible model file."""


@dataclass(frozen=True)
class ModelSpec:
    family: str
    task: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in MODEL_FAMILIES:
            raise ModelError(f"unknown model family {self.family!r}")
        if self.task not in TASKS:
            raise ModelError(f"unknown task {self.task!r}")
        defaults = HYPERPARAMETER_DEFAULTS[self.family]
        unknown = set(self.hyperparameters) - set(defaults)
        if unknown:
            raise ModelError(
                f"unknown hyperparameters for {self.family}: {sorted(unknown)}"
            )
        merged = {**defaults, **self.hyperparameters}
        object.__setattr__(self, "hyperparameters", merged)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "task": self.task,
            "hyperparameters": self.hyperparameters,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "ModelSpec":
        return ModelSpec(d["family"], d["task"], dict(d["hyperparameters"]), int(d["seed"]))


def _feature_descriptor(spec: FeatureSpec) -> dict:
    return {"name": spec.name, "kind": spec.kind, "categories": list(spec.categories)}


def schema_hash(input_features: list[FeatureSpec], output_features: list[FeatureSpec]) -> str:
    doc = {
        "inputs": [_feature_descriptor(f) for f in input_features],
        "outputs": [_feature_descriptor(f) for f in output_features],
    }
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class FeatureFingerprint:
    input_columns: tuple[str, ...]
    output_columns: tuple[str, ...]
    normalization: str
    schema_hash: str

    def to_dict(self) -> dict:
        return {
            "input_columns": list(self.input_columns),
            "output_columns": list(self.output_columns),
            "normalization": self.normalization,
            "schema_hash": self.schema_hash,
        }

    @staticmethod
    def from_dict(d: dict) -> "FeatureFingerprint":
        return FeatureFingerprint(
            tuple(d["input_columns"]),
            tuple(d["output_columns"]),
            d["normalization"],
            d["schema_hash"],
        )


@dataclass(frozen=True)
class FeatureSpace:
    """Selected input/output features, kept with the model so a saved file
    can re-encode fresh CSV data without the original session."""

    input_features: tuple[FeatureSpec, ...]
    output_features: tuple[FeatureSpec, ...]
    task: str

    def to_dict(self) -> dict:
        return {
            "inputs": [_feature_descriptor(f) for f in self.input_features],
            "outputs": [_feature_descriptor(f) for f in self.output_features],
            "task": self.task,
        }

    @staticmethod
    def from_dict(d: dict) -> "FeatureSpace":
        def parse(role, items):
            return tuple(
                FeatureSpec(x["name"], x["kind"], role, tuple(x["categories"])) for x in items
            )

        return FeatureSpace(parse("input", d["inputs"]), parse("output", d["outputs"]), d["task"])


class TrainedModel:
    """A fitted predictor plus its feature fingerprint and training record.

    predict is a pure function of (parameters, input rows); classification
    predictions are probability rows summing to 1.
    """

    def __init__(
        self,
        spec: ModelSpec,
        fingerprint: FeatureFingerprint,
        normalization: NormalizationParams,
        training_history: list[float],
        feature_space: FeatureSpace | None = None,
    ):
        self.spec = spec
        self.fingerprint = fingerprint
        self.normalization = normalization
        self.training_history = list(training_history)
        self.feature_space = feature_space
        # optional input preprocessing needed to rebuild model inputs from a
        # fresh CSV (currently: fitted PCA loadings)
        self.preprocess: dict | None = None

    @property
    def family(self) -> str:
        return self.spec.family

    @property
    def task(self) -> str:
        return self.spec.task

    def predict_values(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict(self, inputs: EncodedMatrix) -> np.ndarray:
        if inputs.column_names != self.fingerprint.input_columns:
            raise FingerprintMismatch(
                "input columns do not match the model fingerprint: "
                f"{list(inputs.column_names)} vs {list(self.fingerprint.input_columns)}"
            )
        return self.predict_values(inputs.values)

    def parameters_dict(self) -> dict:
        raise NotImplementedError

    @classmethod
    def from_parameters(cls, spec, fingerprint, normalization, history, space, params: dict):
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Persistence

_REGISTRY: dict[str, type] = {}


def register_family(family: str):
    def deco(cls):
        _REGISTRY[family] = cls
        return cls

    return deco


def _encode_node(obj):
    if isinstance(obj, np.ndarray):
        return {
            "__nd__": {
                "dtype": str(obj.dtype),
                "shape": list(obj.shape),
                "b64": base64.b64encode(np.ascontiguousarray(obj).tobytes()).decode(),
            }
        }
    if isinstance(obj, dict):
        return {k: _encode_node(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode_node(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _decode_node(obj):
    if isinstance(obj, dict):
        if "__nd__" in obj and set(obj) == {"__nd__"}:
            meta = obj["__nd__"]
            raw = base64.b64decode(meta["b64"])
            arr = np.frombuffer(raw, dtype=np.dtype(meta["dtype"])).reshape(meta["shape"])
            return arr.copy()
        return {k: _decode_node(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode_node(v) for v in obj]
    return obj


def _payload_checksum(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def model_to_bytes(model: TrainedModel) -> bytes:
    payload = {
        "spec": model.spec.to_dict(),
        "fingerprint": model.fingerprint.to_dict(),
        "normalization": model.normalization.to_dict(),
        "training_history": [float(x) for x in model.training_history],
        "feature_space": model.feature_space.to_dict() if model.feature_space else None,
        "preprocess": model.preprocess,
        "parameters": _encode_node(model.parameters_dict()),
    }
    doc = {
        "format_version": FORMAT_VERSION,
        "checksum": _payload_checksum(payload),
        "payload": payload,
    }
    return json.dumps(doc, sort_keys=True).encode()


def model_from_bytes(raw: bytes) -> TrainedModel:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ModelFileError(f"corrupted model file: {e}") from e
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise ModelFileError("not a model file: format_version missing")
    version = doc["format_version"]
    if version != FORMAT_VERSION:
        raise ModelFileError(
            f"unsupported model format version {version} (supported: {FORMAT_VERSION})"
        )
    payload = doc.get("payload")
    if payload is None or _payload_checksum(payload) != doc.get("checksum"):
        raise ModelFileError("checksum mismatch: file is corrupted or was edited")
    if "fingerprint" not in payload:
        raise ModelFileError("model file has no fingerprint")
    spec = ModelSpec.from_dict(payload["spec"])
    fingerprint = FeatureFingerprint.from_dict(payload["fingerprint"])
    normalization = NormalizationParams.from_dict(payload["normalization"])
    history = payload.get("training_history", [])
    space = (
        FeatureSpace.from_dict(payload["feature_space"]) if payload.get("feature_space") else None
    )
    cls = _REGISTRY.get(spec.family)
    if cls is None:
        raise ModelFileError(f"no implementation registered for family {spec.family!r}")
    params = _decode_node(payload["parameters"])
    model = cls.from_parameters(spec, fingerprint, normalization, history, space, params)
    model.preprocess = payload.get("preprocess")
    return model


def save_model(model: TrainedModel, path) -> None:
    data = model_to_bytes(model)
    with open(path, "wb") as fh:
        fh.write(data)


def load_model(path) -> TrainedModel:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as e:
        raise ModelFileError(f"cannot read {path}: {e}") from e
    return model_from_bytes(raw)


def validate_training_inputs(X: np.ndarray, Y: np.ndarray) -> None:
    if X.shape[0] < 2:
        raise ModelError("training needs at least 2 rows")
    if X.shape[0] != Y.shape[0]:
        raise ModelError("inputs and outputs disagree on row count")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(Y)):
        raise ModelError("training data contains NaN or Inf")
