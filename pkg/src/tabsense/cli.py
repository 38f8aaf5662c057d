"""Command-line driver: serve the API, run the pipeline, or run one stage.

Every command exits 0 on success; failures print one machine-parsable
line ``ERROR stage=<stage>: <message>`` to stderr and exit nonzero. All
randomness flows from --seed.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import data as td
from .gsa import EfastConfig, GsaError, run_gsa
from .losses import ALL_LOSSES
from .models import ModelFileError, load_model
from .pipeline import PipelineError, run_pipeline
from .sessions import SessionError


def _fail(stage: str, message: str, code: int = 1) -> int:
    print(f"ERROR stage={stage}: {message}", file=sys.stderr)
    return code


def _dataset_for_model(model, csv_path, split: str, seed: int):
    """Re-encode a fresh CSV through a saved model's feature space."""
    if model.feature_space is None:
        raise SessionError("model file carries no feature space; cannot re-encode data")
    table = td.load_csv(csv_path)
    if split != "all":
        table = td.split_random(
            table, {"train": 0.70, "validation": 0.15, "test": 0.15}, seed=seed
        )
    space = model.feature_space
    table = td.assign_roles(
        table,
        [f.name for f in space.input_features],
        [f.name for f in space.output_features],
    )
    dataset = td.encode(table, space.task)
    if model.preprocess and "pca" in model.preprocess:
        import dataclasses

        pca = td.PcaTransform.from_dict(model.preprocess["pca"])
        dataset = dataclasses.replace(dataset, inputs=pca.transform(dataset.inputs))
    if dataset.inputs.column_names != model.fingerprint.input_columns:
        raise SessionError(
            "encoded columns do not match the model fingerprint; "
            "the CSV schema differs from the training data"
        )
    return table, dataset


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(data_dir=args.data_dir, workers=args.workers)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_run(args) -> int:
    try:
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        return _fail("config", str(e), 2)
    if args.seed is not None:
        config["seed"] = args.seed
    try:
        manifest = run_pipeline(config, args.out)
    except PipelineError as e:
        return _fail(e.stage, str(e))
    print(json.dumps({"out": str(args.out), "stages": manifest["stages_completed"]}))
    return 0


def cmd_gsa(args) -> int:
    try:
        model = load_model(args.model)
    except ModelFileError as e:
        return _fail("model", str(e), 2)
    try:
        _, dataset = _dataset_for_model(model, args.data, args.split, args.seed)
        config = EfastConfig(
            samples_per_curve=args.samples,
            resamples=args.resamples,
            seed=args.seed,
        )
        result = run_gsa(model, dataset, args.split, config)
    except (SessionError, td.DataError, GsaError) as e:
        return _fail("gsa", str(e))
    text = result.to_csv()
    if args.out:
        Path(args.out).write_text(text)
        print(args.out)
    else:
        print(text, end="")
    return 0


def cmd_explain(args) -> int:
    from .explain import (
        LimeConfig,
        ShapConfig,
        build_space,
        explanation_payload,
        lime_explain,
        shap_explain,
    )

    try:
        model = load_model(args.model)
    except ModelFileError as e:
        return _fail("model", str(e), 2)
    try:
        table, dataset = _dataset_for_model(model, args.data, args.split, args.seed)
        if model.preprocess and "pca" in model.preprocess:
            raise SessionError("explain does not support PCA-preprocessed model files")
        norm = model.normalization if model.normalization.method != "none" else None
        space = build_space(table, dataset, norm)
        if args.method == "lime":
            expl = lime_explain(
                model, dataset, space, args.split, args.sample, LimeConfig(seed=args.seed)
            )
        else:
            expl = shap_explain(
                model, dataset, space, args.split, args.sample, ShapConfig(seed=args.seed)
            )
    except (SessionError, td.DataError, ValueError) as e:
        return _fail("explain", str(e))
    doc = explanation_payload(expl, normalized=args.normalized)
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def cmd_evaluate(args) -> int:
    from .evaluation import EvaluationError, evaluate_all

    try:
        model_files = sorted(Path(args.models_dir).glob("*.tsmodel"))
        if not model_files:
            return _fail("evaluate", f"no .tsmodel files in {args.models_dir}", 2)
        models = [(p.stem, load_model(p)) for p in model_files]
        _, dataset = _dataset_for_model(models[0][1], args.data, args.split, args.seed)
        report = evaluate_all(
            models, dataset, models[0][1].fingerprint, args.split, args.loss
        )
    except (SessionError, td.DataError, ModelFileError, EvaluationError) as e:
        return _fail("evaluate", str(e))
    lines = ["model_id,family,error"]
    for mid, err in report.entries:
        fam = dict(models)[mid].spec.family
        lines.append(f"{mid},{fam},{err:.12g}")
    print("\n".join(lines))
    print(f"best={report.best_model_id}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabsense",
        description="Tabular model workbench with global/local sensitivity analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", default=None, help="persist models and configs here")
    p.add_argument("--workers", type=int, default=2)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("run", help="run the full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("gsa", help="Sobol indices of a saved model on a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="all", choices=["all", "train", "validation", "test"])
    p.add_argument("--out", default=None)
    p.add_argument("--samples", type=int, default=65)
    p.add_argument("--resamples", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_gsa)

    p = sub.add_parser("explain", help="LIME/SHAP explanation of one sample")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--sample", type=int, required=True)
    p.add_argument("--method", choices=["lime", "shap"], default="lime")
    p.add_argument("--split", default="all", choices=["all", "train", "validation", "test"])
    p.add_argument("--normalized", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_explain)

    p = sub.add_parser("evaluate", help="evaluate saved models on a CSV")
    p.add_argument("--models-dir", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="all", choices=["all", "train", "validation", "test"])
    p.add_argument("--loss", required=True, choices=sorted(ALL_LOSSES))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
