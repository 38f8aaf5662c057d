"""Session state and the synchronous operations behind the HTTP service.

A session owns one dataset, one feature configuration, and a registry of
models. Mutations are serialized per session and bump a revision counter
so stale clients are detectable; changing the feature selection
invalidates the evaluation report and GSA result.
"""
from __future__ import annotations

import dataclasses
import itertools
import json
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from . import data as td
from .evaluation import EvaluationError, EvaluationReport, evaluate_all, plot_goodness_of_fit, plot_series
from .explain import (
    ExplainError,
    LimeConfig,
    ShapConfig,
    build_numeric_space,
    build_space,
    explanation_payload,
    lime_explain,
    shap_explain,
)
from .gsa import EfastConfig, GsaError, SobolResult, run_gsa
from .losses import ALL_LOSSES
from .models import (
    FeatureFingerprint,
    FeatureSpace,
    ModelError,
    ModelFileError,
    ModelSpec,
    TrainedModel,
    model_from_bytes,
    model_to_bytes,
    schema_hash,
    train,
)


class SessionError(Exception):
    """Precondition violation (HTTP 422)."""

    http_status = 422


class NotFoundError(SessionError):
    http_status = 404


class BusyError(SessionError):
    http_status = 409


DEFAULT_FRACTIONS = {"train": 0.70, "validation": 0.15, "test": 0.15}


@dataclass(frozen=True)
class FeatureConfig:
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    task: str
    normalization: str = "none"
    split: dict = field(default_factory=lambda: dict(DEFAULT_FRACTIONS))
    balance: dict | None = None  # {"targets": [...], "bins": int | None}
    pca: dict | None = None  # {"variance_kept": float}
    correlation_threshold: float = 0.9

    @staticmethod
    def from_payload(doc: dict) -> "FeatureConfig":
        known = {
            "inputs",
            "outputs",
            "task",
            "normalization",
            "split",
            "balance",
            "pca",
            "correlation_threshold",
        }
        unknown = set(doc) - known
        if unknown:
            raise SessionError(f"unknown feature-config keys: {sorted(unknown)}")
        if not doc.get("inputs") or not doc.get("outputs"):
            raise SessionError("feature config needs inputs and outputs")
        if doc.get("task") not in ("regression", "classification"):
            raise SessionError("task must be regression or classification")
        norm = doc.get("normalization", "none")
        if norm not in td.NORMALIZATION_METHODS:
            raise SessionError(f"unknown normalization {norm!r}")
        return FeatureConfig(
            inputs=tuple(doc["inputs"]),
            outputs=tuple(doc["outputs"]),
            task=doc["task"],
            normalization=norm,
            split=dict(doc.get("split") or DEFAULT_FRACTIONS),
            balance=doc.get("balance"),
            pca=doc.get("pca"),
            correlation_threshold=float(doc.get("correlation_threshold", 0.9)),
        )

    def to_dict(self) -> dict:
        return {
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "task": self.task,
            "normalization": self.normalization,
            "split": dict(self.split),
            "balance": self.balance,
            "pca": self.pca,
            "correlation_threshold": self.correlation_threshold,
        }


@dataclass
class Prepared:
    dataset: td.EncodedDataset  # inputs post-PCA when enabled
    normalization: td.NormalizationParams
    fingerprint: FeatureFingerprint
    space: object  # ExplanationSpace
    feature_space: FeatureSpace
    pca: td.PcaTransform | None
    correlation: td.CorrelationReport
    balance_report: td.BalanceReport | None
    dropped_count: int
    table: td.DataTable


@dataclass
class ModelEntry:
    model_id: str
    spec: ModelSpec
    status: str  # 'training' | 'ready' | 'failed'
    model: TrainedModel | None = None
    job_id: str | None = None
    error: str | None = None

    def summary(self) -> dict:
        return {
            "model_id": self.model_id,
            "family": self.spec.family,
            "task": self.spec.task,
            "hyperparameters": self.spec.hyperparameters,
            "seed": self.spec.seed,
            "status": self.status,
            "job_id": self.job_id,
            "error": self.error,
        }


class Session:
    def __init__(self, session_id: str, seed: int = 0, storage_dir: Path | None = None):
        self.session_id = session_id
        self.seed = int(seed)
        self.revision = 0
        self.lock = threading.RLock()
        self.train_queue_lock = threading.Lock()  # serializes training jobs
        self.mutation_lock = threading.Lock()  # one mutating request at a time
        self.uploads: dict[str, td.DataTable] = {}
        self.table: td.DataTable | None = None
        self.config: FeatureConfig | None = None
        self.prepared: Prepared | None = None
        self.models: dict[str, ModelEntry] = {}
        self.latest_report: EvaluationReport | None = None
        self.latest_gsa: SobolResult | None = None
        self.gsa_job_id: str | None = None
        self._counter = itertools.count()
        self.storage_dir = storage_dir
        if storage_dir is not None:
            storage_dir.mkdir(parents=True, exist_ok=True)

    # -- helpers ---------------------------------------------------------

    def bump(self) -> int:
        self.revision += 1
        return self.revision

    @contextmanager
    def mutation(self):
        """Reject a mutating request while another one is in flight."""
        if not self.mutation_lock.acquire(blocking=False):
            raise BusyError("another mutating operation is in flight for this session")
        try:
            yield
        finally:
            self.mutation_lock.release()

    def _persist_config(self):
        if self.storage_dir is None:
            return
        doc = {"seed": self.seed, "config": self.config.to_dict() if self.config else None}
        (self.storage_dir / "session.json").write_text(json.dumps(doc, indent=2))

    def _persist_model(self, entry: ModelEntry):
        if self.storage_dir is None or entry.model is None:
            return
        mdir = self.storage_dir / "models"
        mdir.mkdir(exist_ok=True)
        (mdir / f"{entry.model_id}.tsmodel").write_bytes(model_to_bytes(entry.model))

    # -- dataset ---------------------------------------------------------

    def upload_dataset(self, csv_text: str, role: str = "all") -> dict:
        if role not in ("all", "train", "validation", "test"):
            raise SessionError(f"unknown dataset role {role!r}")
        try:
            table = td.load_csv_text(csv_text, role_hint=role)
        except td.DataError as e:
            raise SessionError(f"bad dataset: {e}") from e
        with self.lock:
            if role == "all":
                self.uploads = {"all": table}
            else:
                self.uploads.pop("all", None)
                self.uploads[role] = table
            self.table = None
            self.config = None
            self.prepared = None
            self.latest_report = None
            self.latest_gsa = None
            rev = self.bump()
        return {
            "rows": table.n_rows,
            "columns": [
                {
                    "name": f.name,
                    "kind": f.kind,
                    "categories": list(f.categories) if f.kind == "categorical" else None,
                }
                for f in table.schema
            ],
            "role": role,
            "revision": rev,
        }

    def _assemble_table(self, config: FeatureConfig) -> td.DataTable:
        if not self.uploads:
            raise SessionError("no dataset uploaded")
        if "all" in self.uploads:
            fractions = {k: float(config.split.get(k, 0.0)) for k in td.SPLITS}
            seed = int(config.split.get("seed", self.seed))
            return td.split_random(self.uploads["all"], fractions, seed)
        if "train" not in self.uploads:
            raise SessionError("separate-file sessions need at least a train upload")
        parts = [self.uploads[r] for r in ("train", "validation", "test") if r in self.uploads]
        return td.concat_tables(parts)

    def configure_features(self, payload: dict) -> dict:
        config = FeatureConfig.from_payload(payload)
        try:
            table = self._assemble_table(config)
            table = td.assign_roles(table, list(config.inputs), list(config.outputs))
            balance_rep = None
            if config.balance:
                targets = list(config.balance.get("targets", []))
                bins = config.balance.get("bins")
                if not targets:
                    raise SessionError("balance config needs targets")
                # numeric outputs act as class labels in classification mode
                labels = config.outputs if config.task == "classification" else ()
                balance_rep = td.balance_report(table, targets, bins, labels)
                table = td.apply_balancing(
                    table, targets, seed=self.seed, bins=bins, label_features=labels
                )
            dataset = td.encode(table, config.task)
            pca = None
            if config.pca is not None:
                kept = float(config.pca.get("variance_kept", 0.99))
                pca = td.fit_pca(dataset.inputs, dataset.split_mask("train"), kept)
                dataset = dataclasses.replace(dataset, inputs=pca.transform(dataset.inputs))
            normalization = td.fit_normalizer(
                dataset.inputs.values, config.normalization, dataset.split_mask("train")
            )
            correlation = td.correlation_check(
                td.EncodedMatrix(
                    dataset.inputs.column_names,
                    dataset.inputs.values[dataset.split_mask("train")],
                    dict(dataset.inputs.group_map),
                ),
                threshold=config.correlation_threshold,
            )
        except td.DataError as e:
            raise SessionError(str(e)) from e

        in_specs = table.features_with_role("input")
        out_specs = table.features_with_role("output")
        if pca is not None:
            pc_specs = [td.FeatureSpec(n, "numeric", "input") for n in dataset.inputs.column_names]
            feature_space = FeatureSpace(tuple(pc_specs), tuple(out_specs), config.task)
            train_scores = dataset.inputs.values[dataset.split_mask("train")]
            norm_for_display = normalization if config.normalization != "none" else None
            space = build_numeric_space(
                dataset.inputs.column_names, train_scores, norm_for_display
            )
            fp_hash = schema_hash(list(pc_specs), out_specs)
        else:
            feature_space = FeatureSpace(tuple(in_specs), tuple(out_specs), config.task)
            norm_for_display = normalization if config.normalization != "none" else None
            space = build_space(table, dataset, norm_for_display)
            fp_hash = schema_hash(in_specs, out_specs)
        fingerprint = FeatureFingerprint(
            dataset.inputs.column_names,
            dataset.outputs.column_names,
            config.normalization,
            fp_hash,
        )
        with self.lock:
            self.table = table
            self.config = config
            self.prepared = Prepared(
                dataset=dataset,
                normalization=normalization,
                fingerprint=fingerprint,
                space=space,
                feature_space=feature_space,
                pca=pca,
                correlation=correlation,
                balance_report=balance_rep,
                dropped_count=dataset.dropped_count,
                table=table,
            )
            # feature selection changed: best model and GSA are stale
            self.latest_report = None
            self.latest_gsa = None
            self.gsa_job_id = None
            rev = self.bump()
            self._persist_config()
        doc = {
            "revision": rev,
            "task": config.task,
            "input_columns": list(dataset.inputs.column_names),
            "output_columns": list(dataset.outputs.column_names),
            "rows_kept": int(dataset.inputs.n_rows),
            "rows_dropped_missing": int(dataset.dropped_count),
            "split_counts": {
                s: int(dataset.split_mask(s).sum()) for s in td.SPLITS
            },
            "warnings": correlation.warnings(),
            "schema_hash": fingerprint.schema_hash,
        }
        if balance_rep is not None:
            doc["balance"] = {
                name: [dataclasses.asdict(e) for e in entries]
                for name, entries in balance_rep.entries.items()
            }
            doc["imbalance_ratio"] = balance_rep.imbalance_ratio
        if pca is not None:
            doc["pca_components"] = pca.n_components
        return doc

    # -- models ----------------------------------------------------------

    def require_prepared(self) -> Prepared:
        if self.prepared is None:
            raise SessionError("configure features before this operation")
        return self.prepared

    def new_model_entry(self, payload: dict) -> ModelEntry:
        prepared = self.require_prepared()
        family = payload.get("family")
        seed = payload.get("seed")
        try:
            spec = ModelSpec(
                family=family,
                task=self.config.task,
                hyperparameters=dict(payload.get("hyperparameters") or {}),
                seed=self.seed if seed is None else int(seed),
            )
        except ModelError as e:
            raise SessionError(str(e)) from e
        with self.lock:
            model_id = f"m{next(self._counter):03d}"
            entry = ModelEntry(model_id, spec, status="training")
            self.models[model_id] = entry
            self.bump()
        return entry

    def run_training(self, entry: ModelEntry, progress=None) -> None:
        prepared = self.require_prepared()
        mask = prepared.dataset.split_mask("train")
        X = prepared.dataset.inputs.values[mask]
        Y = prepared.dataset.outputs.values[mask]
        norm = prepared.normalization if self.config.normalization != "none" else None
        try:
            model = train(
                entry.spec,
                X,
                Y,
                prepared.fingerprint,
                normalization=norm,
                feature_space=prepared.feature_space,
                progress=progress,
            )
            if prepared.pca is not None:
                model.preprocess = {"pca": prepared.pca.to_dict()}
        except ModelError as e:
            with self.lock:
                entry.status = "failed"
                entry.error = str(e)
                self.bump()
            raise SessionError(str(e)) from e
        with self.lock:
            entry.model = model
            entry.status = "ready"
            self.bump()
            self._persist_model(entry)

    def train_model_sync(self, payload: dict) -> ModelEntry:
        entry = self.new_model_entry(payload)
        self.run_training(entry)
        return entry

    def register_model_bytes(self, raw: bytes) -> dict:
        try:
            model = model_from_bytes(raw)
        except ModelFileError as e:
            raise SessionError(f"bad model file: {e}") from e
        with self.lock:
            model_id = f"m{next(self._counter):03d}"
            entry = ModelEntry(model_id, model.spec, status="ready", model=model)
            self.models[model_id] = entry
            rev = self.bump()
            self._persist_model(entry)
        return {"model_id": model_id, "revision": rev}

    def get_model(self, model_id: str) -> ModelEntry:
        entry = self.models.get(model_id)
        if entry is None:
            raise NotFoundError(f"unknown model {model_id!r}")
        return entry

    def ready_models(self) -> list[tuple[str, TrainedModel]]:
        return [(mid, e.model) for mid, e in self.models.items() if e.status == "ready"]

    def best_model(self) -> tuple[str, TrainedModel]:
        if self.latest_report is None:
            raise SessionError("no evaluation yet: evaluate models first")
        mid = self.latest_report.best_model_id
        return mid, self.get_model(mid).model

    # -- evaluation, GSA, explanations ------------------------------------

    def evaluate(self, split: str, loss: str) -> dict:
        prepared = self.require_prepared()
        if loss not in ALL_LOSSES:
            raise SessionError(f"unknown loss {loss!r}")
        models = self.ready_models()
        if not models:
            raise SessionError("no trained models to evaluate")
        try:
            report = evaluate_all(models, prepared.dataset, prepared.fingerprint, split, loss)
        except EvaluationError as e:
            raise SessionError(str(e)) from e
        with self.lock:
            self.latest_report = report
            self.latest_gsa = None  # recomputed for the new best model
            rev = self.bump()
        doc = report.to_dict()
        doc["families"] = {
            mid: self.models[mid].spec.family for mid, _ in report.entries
        }
        doc["revision"] = rev
        return doc

    def run_gsa_now(self, split: str | None = None, config: EfastConfig | None = None) -> dict:
        prepared = self.require_prepared()
        mid, model = self.best_model()
        split = split or self.latest_report.split
        # the automatic post-evaluation run feeds the refinement decision, so
        # it uses longer search curves than the bare minimum N=65
        config = config or EfastConfig(samples_per_curve=257, seed=self.seed)
        try:
            result = run_gsa(
                model,
                prepared.dataset,
                split,
                config,
                correlation_threshold=self.config.correlation_threshold,
            )
        except GsaError as e:
            raise SessionError(str(e)) from e
        with self.lock:
            self.latest_gsa = result
            rev = self.bump()
        doc = result.to_dict()
        doc["model_id"] = mid
        doc["split"] = split
        doc["revision"] = rev
        return doc

    def explain(self, payload: dict) -> dict:
        prepared = self.require_prepared()
        split = payload.get("split", "validation")
        sample_index = payload.get("sample_index")
        if sample_index is None:
            raise SessionError("explain needs a sample_index")
        method = payload.get("method", "lime")
        model_id = payload.get("model_id")
        if model_id is None:
            model_id, model = self.best_model()
        else:
            entry = self.get_model(model_id)
            if entry.status != "ready":
                raise SessionError(f"model {model_id} is not ready")
            model = entry.model
        class_index = payload.get("class_index")
        seed = int(payload.get("seed", self.seed))
        try:
            if method == "lime":
                config = LimeConfig(
                    num_samples=int(payload.get("num_samples", 5000)),
                    num_features=int(payload.get("num_features", 6)),
                    seed=seed,
                )
                expl = lime_explain(
                    model, prepared.dataset, prepared.space, split, int(sample_index),
                    config, class_index,
                )
            elif method == "shap":
                config = ShapConfig(
                    background_size=int(payload.get("background_size", 100)),
                    num_coalitions=int(payload.get("num_coalitions", 2048)),
                    seed=seed,
                )
                expl = shap_explain(
                    model, prepared.dataset, prepared.space, split, int(sample_index),
                    config, class_index,
                )
            else:
                raise SessionError(f"unknown explanation method {method!r}")
        except ExplainError as e:
            raise SessionError(str(e)) from e
        doc = explanation_payload(expl, bool(payload.get("normalized", False)))
        doc["model_id"] = model_id
        doc["revision"] = self.revision
        return doc

    def plot(self, model_id, split, output, mode, sort) -> dict:
        prepared = self.require_prepared()
        if model_id is None:
            model_id, model = self.best_model()
        else:
            entry = self.get_model(model_id)
            if entry.status != "ready":
                raise SessionError(f"model {model_id} is not ready")
            model = entry.model
        try:
            if mode == "series":
                doc = plot_series(model, prepared.dataset, split, output, sort)
            elif mode == "goodness_of_fit":
                doc = plot_goodness_of_fit(model, prepared.dataset, split, output)
            else:
                raise SessionError(f"unknown plot mode {mode!r}")
        except EvaluationError as e:
            raise SessionError(str(e)) from e
        doc["model_id"] = model_id
        doc["revision"] = self.revision
        return doc

    def status(self) -> dict:
        return {
            "session_id": self.session_id,
            "revision": self.revision,
            "seed": self.seed,
            "has_dataset": bool(self.uploads),
            "configured": self.prepared is not None,
            "config": self.config.to_dict() if self.config else None,
            "models": [e.summary() for e in self.models.values()],
            "best_model_id": self.latest_report.best_model_id if self.latest_report else None,
            "evaluated": self.latest_report is not None,
            "gsa_ready": self.latest_gsa is not None,
        }


class SessionStore:
    def __init__(self, data_dir: Path | None = None):
        self.data_dir = Path(data_dir) if data_dir else None
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()
        self._counter = itertools.count(1)
        if self.data_dir is not None:
            self._restore()

    def _restore(self):
        if not self.data_dir.exists():
            return
        for sdir in sorted(self.data_dir.iterdir()):
            meta = sdir / "session.json"
            if not meta.is_file():
                continue
            try:
                doc = json.loads(meta.read_text())
            except json.JSONDecodeError:
                continue
            session = Session(sdir.name, seed=doc.get("seed", 0), storage_dir=sdir)
            if doc.get("config"):
                try:
                    session.config = FeatureConfig.from_payload(doc["config"])
                except SessionError:
                    pass
            mdir = sdir / "models"
            if mdir.is_dir():
                for mf in sorted(mdir.glob("*.tsmodel")):
                    try:
                        model = model_from_bytes(mf.read_bytes())
                    except ModelFileError:
                        continue
                    entry = ModelEntry(mf.stem, model.spec, status="ready", model=model)
                    session.models[mf.stem] = entry
                    next(session._counter)
            self.sessions[session.session_id] = session

    def create(self, seed: int = 0) -> Session:
        with self.lock:
            sid = f"s{next(self._counter):04d}"
            storage = (self.data_dir / sid) if self.data_dir else None
            session = Session(sid, seed=seed, storage_dir=storage)
            session._persist_config()
            self.sessions[sid] = session
            return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise NotFoundError(f"unknown session {session_id!r}")
        return session
