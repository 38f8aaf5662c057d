"""Headless orchestration: run the whole loop from a config document.

The config mirrors the API payloads one to one. Stages run in order
(data -> features -> train -> evaluate -> gsa -> explain); any failure
aborts with a stage-tagged error after flushing a manifest of whatever
completed. Outputs are deterministic for a given (config, seed).
"""
from __future__ import annotations

import json
from pathlib import Path

from .gsa import EfastConfig
from .models import model_to_bytes
from .sessions import Session, SessionError


class PipelineError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


REQUIRED_KEYS = ("data", "features", "models", "evaluate")


def _validate_config(config: dict) -> None:
    for key in REQUIRED_KEYS:
        if key not in config:
            raise PipelineError("config", f"missing config section {key!r}")
    from .models import MODEL_FAMILIES

    for i, m in enumerate(config["models"]):
        if m.get("family") not in MODEL_FAMILIES:
            raise PipelineError(
                "config", f"models[{i}]: unknown model family {m.get('family')!r}"
            )


def run_pipeline(config: dict, out_dir, seed: int | None = None) -> dict:
    """Execute the configured loop and write the artifact bundle.

    Returns the manifest (also written to manifest.json in ``out_dir``).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest: dict = {
        "schema_version": 1,
        "seed": int(config.get("seed", 0) if seed is None else seed),
        "stages_completed": [],
        "models": [],
        "reports": {},
        "explanations": [],
        "error": None,
    }

    def flush():
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))

    def fail(stage: str, message: str):
        manifest["error"] = {"stage": stage, "message": message}
        flush()
        raise PipelineError(stage, message)

    try:
        _validate_config(config)
    except PipelineError as e:
        manifest["error"] = {"stage": e.stage, "message": str(e)}
        flush()
        raise

    session = Session("pipeline", seed=manifest["seed"])

    # data
    stage = "data"
    try:
        data_cfg = config["data"]
        if "csv" in data_cfg:
            session.upload_dataset(Path(data_cfg["csv"]).read_text(encoding="utf-8"), "all")
        else:
            for role in ("train", "validation", "test"):
                key = f"{role}_csv"
                if key in data_cfg:
                    session.upload_dataset(
                        Path(data_cfg[key]).read_text(encoding="utf-8"), role
                    )
        manifest["stages_completed"].append(stage)

        stage = "features"
        features_doc = session.configure_features(config["features"])
        manifest["reports"]["features"] = {
            k: features_doc[k]
            for k in ("rows_kept", "rows_dropped_missing", "split_counts", "warnings")
        }
        manifest["stages_completed"].append(stage)

        stage = "train"
        model_dir = out / "models"
        model_dir.mkdir(exist_ok=True)
        for payload in config["models"]:
            entry = session.train_model_sync(payload)
            path = model_dir / f"{entry.model_id}.tsmodel"
            path.write_bytes(model_to_bytes(entry.model))
            manifest["models"].append(
                {"model_id": entry.model_id, "family": entry.spec.family, "file": str(path)}
            )
        manifest["stages_completed"].append(stage)

        stage = "evaluate"
        ev = config["evaluate"]
        report_doc = session.evaluate(ev["split"], ev["loss"])
        lines = ["model_id,family,error"]
        for item in report_doc["entries"]:
            fam = report_doc["families"][item["model_id"]]
            lines.append(f"{item['model_id']},{fam},{item['error']:.12g}")
        (out / "error_report.csv").write_text("\n".join(lines) + "\n")
        manifest["reports"]["evaluation"] = {
            "split": report_doc["split"],
            "loss": report_doc["loss"],
            "best_model_id": report_doc["best_model_id"],
            "file": str(out / "error_report.csv"),
        }
        manifest["stages_completed"].append(stage)

        stage = "gsa"
        gsa_cfg = dict(config.get("gsa") or {})
        efast = EfastConfig(
            samples_per_curve=int(gsa_cfg.get("samples_per_curve", 257)),
            interference_factor=int(gsa_cfg.get("interference_factor", 4)),
            resamples=int(gsa_cfg.get("resamples", 10)),
            seed=manifest["seed"],
        )
        session.run_gsa_now(split=gsa_cfg.get("split"), config=efast)
        (out / "gsa.csv").write_text(session.latest_gsa.to_csv())
        manifest["reports"]["gsa"] = {
            "file": str(out / "gsa.csv"),
            "warnings": list(session.latest_gsa.warnings),
        }
        manifest["stages_completed"].append(stage)

        stage = "explain"
        requests = config.get("explain") or []
        if requests:
            edir = out / "explanations"
            edir.mkdir(exist_ok=True)
            for i, req in enumerate(requests):
                doc = session.explain(req)
                path = edir / f"{i:03d}_{doc['method']}_{doc['split']}_{doc['sample_index']}.json"
                path.write_text(json.dumps(doc, indent=2, sort_keys=True))
                manifest["explanations"].append(str(path))
            manifest["stages_completed"].append(stage)
    except SessionError as e:
        fail(stage, str(e))
    except OSError as e:
        fail(stage, str(e))

    flush()
    return manifest
