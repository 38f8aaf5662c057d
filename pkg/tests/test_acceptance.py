"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one [PASS]/[FAIL] line; run with -s (or rely on pytest's
captured-output-on-failure) to see them. Criteria run self-contained and
in any order.
"""
import os
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from tabsense import data as td
from tabsense.datasets import (
    SURVIVAL_INPUTS,
    SURVIVAL_OUTPUT,
    survival_surrogate,
    wide_regression_csv,
)
from tabsense.explain import LimeConfig, ShapConfig, build_space, lime_explain
from tabsense.explain.limex import lime_attributions
from tabsense.explain.shapx import kernel_shap, sample_background
from tabsense.explain.space import ExplanationSpace, SpaceFeature
from tabsense.gsa import EfastConfig, efast_design, efast_indices, run_gsa
from tabsense.losses import ALL_LOSSES, compute_loss
from tabsense.models import (
    ModelSpec,
    check_model_gradients,
    load_model,
    save_model,
    train,
)
from tabsense.service import create_app

from conftest import (
    make_classification_dataset,
    make_fingerprint,
    make_regression_dataset,
    train_arrays,
)
from oracles import (
    background_value_fn,
    brute_force_shapley,
    ishigami,
    ishigami_analytic,
    naive_loss,
    saltelli_jansen,
)


def report(ok: bool, name: str, detail: str = "") -> None:
    tag = "PASS" if ok else "FAIL"
    print(f"[{tag}] {name}" + (f": {detail}" if detail else ""))
    assert ok, f"{name}: {detail}"


def _efast_on_function(fn, d, config, bounds=None):
    curves = efast_design(config, d)
    outs = []
    for curve in curves:
        x = curve.unit_points
        if bounds is not None:
            lo = np.array([b[0] for b in bounds])
            hi = np.array([b[1] for b in bounds])
            x = lo + x * (hi - lo)
        outs.append((curve, np.asarray(fn(x), dtype=float)))
    s1, st, total, constant = efast_indices(outs, config, d)
    return s1, st


def _numeric_space(train_values):
    d = train_values.shape[1]
    names = tuple(f"x{j}" for j in range(d))
    return ExplanationSpace([SpaceFeature(n, "numeric") for n in names], train_values, names)


def test_c1_efast_vs_analytic_ishigami():
    """eFAST on Ishigami at N=65, M=4, averaged over 10 phase draws."""
    start = time.perf_counter()
    config = EfastConfig(samples_per_curve=65, interference_factor=4, resamples=10, seed=0)
    bounds = [(-np.pi, np.pi)] * 3
    s1, st = _efast_on_function(ishigami, 3, config, bounds)
    elapsed = time.perf_counter() - start
    s1_true = np.array([0.3139, 0.4424, 0.0])
    st3_true = 0.244
    err_s1 = np.max(np.abs(s1 - s1_true))
    err_st3 = abs(st[2] - st3_true)
    report(
        err_s1 < 0.05 and err_st3 < 0.05 and elapsed < 5.0,
        "C1 eFAST vs analytic Ishigami",
        f"max|S1 err|={err_s1:.4f}, |ST3 err|={err_st3:.4f}, {elapsed:.2f}s",
    )


def test_c2_efast_vs_saltelli_oracle():
    start = time.perf_counter()
    config = EfastConfig(resamples=10, seed=0)
    ok = True
    details = []
    for label, fn, bounds in (
        ("x1*x2", lambda x: x[:, 0] * x[:, 1], [(-1.0, 1.0)] * 2),
        ("x1+0.5*x2^2", lambda x: x[:, 0] + 0.5 * x[:, 1] ** 2, None),
    ):
        s1, st = _efast_on_function(fn, 2, config, bounds)
        s1_ref, st_ref = saltelli_jansen(fn, 2, n=2**14, seed=1, bounds=bounds)
        d1 = np.max(np.abs(s1 - s1_ref))
        d2 = np.max(np.abs(st - st_ref))
        ok &= d1 < 0.05 and d2 < 0.05
        details.append(f"{label}: |dS1|={d1:.3f} |dST|={d2:.3f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 30.0
    report(ok, "C2 eFAST vs Saltelli/Jansen oracle", "; ".join(details) + f", {elapsed:.1f}s")


def test_c3_exact_kernel_shap_vs_brute_force():
    table, dataset = make_regression_dataset(
        n=400,
        d=8,
        fn=lambda X: 2 * X[:, 0] + X[:, 1] * X[:, 2] + np.sin(3 * X[:, 3]) - X[:, 5] ** 2,
        seed=0,
    )
    fp = make_fingerprint(table, dataset)
    X, Y = train_arrays(dataset)
    model = train(ModelSpec("gradient_boosted_trees", "regression", {"rounds": 30}), X, Y, fp)
    space = _numeric_space(X)
    model_fn = lambda rows: model.predict_values(rows)[:, 0]
    config = ShapConfig(background_size=20, seed=3)

    x = X[11]
    phi, base, exact = kernel_shap(space, x, model_fn, config)
    bg = sample_background(space, config)
    vfn = background_value_fn(model_fn, space.encode_rows, x, bg)
    phi_bf = brute_force_shapley(vfn, 8)
    max_diff = float(np.max(np.abs(phi - phi_bf)))

    rng = np.random.default_rng(0)
    worst_eff = 0.0
    rows = rng.integers(0, X.shape[0], size=100)
    for r in rows:
        phi_r, base_r, _ = kernel_shap(space, X[r], model_fn, config)
        fx = float(model_fn(X[r : r + 1])[0])
        worst_eff = max(worst_eff, abs(base_r + phi_r.sum() - fx))
    report(
        exact and max_diff < 1e-6 and worst_eff < 1e-6,
        "C3 exact Kernel SHAP vs factorial Shapley (d=8)",
        f"max|diff|={max_diff:.2e}, worst efficiency residual={worst_eff:.2e}",
    )


def test_c4_lime_linear_recovery():
    rng = np.random.default_rng(0)
    train_values = rng.uniform(0.0, 1.0, size=(600, 3))
    space = _numeric_space(train_values)
    model_fn = lambda X: 2.0 * X[:, 0] - 3.0 * X[:, 1] + 0.0 * X[:, 2]
    instance = np.array([0.92, 0.91, 0.5])  # both informative features in their top bins
    hits = 0
    for seed in range(100):
        coefs, _, _ = lime_attributions(
            space, instance, model_fn, LimeConfig(num_samples=1200, seed=seed)
        )
        top2 = set(np.argsort(-np.abs(coefs))[:2].tolist())
        if top2 == {0, 1} and coefs[0] > 0 and coefs[1] < 0:
            hits += 1
    report(hits >= 95, "C4 LIME linear recovery", f"{hits}/100 seeded runs correct")


def _loss_instance(kind, rng):
    n = int(rng.integers(1, 24))
    if kind in ("mae", "mse", "rmse", "msle", "rmsle", "log_cosh"):
        m = int(rng.integers(1, 4))
        return rng.uniform(-0.9, 4.0, size=(n, m)), rng.uniform(-0.9, 4.0, size=(n, m))
    if kind in ("hinge", "smoothed_hinge", "squared_hinge", "modified_huber", "ramp"):
        return rng.uniform(0, 1, size=n), rng.integers(0, 2, size=n).astype(float)
    if kind == "binary_cross_entropy":
        p = rng.uniform(0, 1, size=(n, 2))
        t = np.zeros((n, 2))
        t[np.arange(n), rng.integers(0, 2, size=n)] = 1.0
        return p, t
    k = int(rng.integers(2, 5))
    raw = rng.uniform(0.05, 1.0, size=(n, k))
    p = raw / raw.sum(axis=1, keepdims=True)
    t = np.zeros((n, k))
    t[np.arange(n), rng.integers(0, k, size=n)] = 1.0
    return (np.log(p), t) if kind == "nll" else (p, t)


def test_c5_loss_catalog_vs_naive_oracle():
    rng = np.random.default_rng(42)
    worst = 0.0
    checks = 0
    for _ in range(1000):
        kind = ALL_LOSSES[int(rng.integers(0, len(ALL_LOSSES)))]
        p, t = _loss_instance(kind, rng)
        worst = max(worst, abs(compute_loss(kind, p, t) - naive_loss(kind, p, t)))
        checks += 1
    # identities
    p = rng.uniform(0, 3, size=500)
    t = rng.uniform(0, 3, size=500)
    ident = abs(compute_loss("rmse", p, t) ** 2 - compute_loss("mse", p, t))
    zero_ok = all(
        compute_loss(k, p, p.copy()) == 0.0 and compute_loss(k, p, t) > 0
        for k in ("mae", "mse", "rmse", "msle", "rmsle", "log_cosh")
    )
    report(
        worst < 1e-12 and ident < 1e-12 and zero_ok and len(ALL_LOSSES) == 14,
        "C5 loss catalog vs naive oracle",
        f"{checks} instances, worst |diff|={worst:.2e}, rmse^2-mse={ident:.2e}",
    )


def _load_survival_table():
    """The real passenger file when available, else the bundled surrogate."""
    path = os.environ.get("TITANIC_CSV")
    if path and os.path.isfile(path):
        return td.load_csv(path), "real file"
    return td.load_csv_text(survival_surrogate()), "bundled surrogate"


def test_c6_survival_reproduction_rank_only():
    table, source = _load_survival_table()
    n_rows = table.n_rows
    table = td.split_random(table, {"train": 0.7, "validation": 0.15, "test": 0.15}, 0)
    table = td.assign_roles(table, SURVIVAL_INPUTS, [SURVIVAL_OUTPUT])
    dataset = td.encode(table, "classification")
    fp = make_fingerprint(table, dataset)
    X, Y = train_arrays(dataset)
    model = train(
        ModelSpec("gradient_boosted_trees", "classification", {"rounds": 50}, seed=0),
        X, Y, fp,
    )
    gsa = run_gsa(
        model, dataset, "validation",
        EfastConfig(samples_per_curve=257, resamples=10, seed=0),
    )
    st = {e.input_name: e.st for e in gsa.outputs["Survived=1"]}
    strong = min(st[k] for k in ("Pclass", "Age", "SibSp"))
    weak = max(st[k] for k in ("Fare", "Parch"))
    rank_ok = strong > weak

    space = build_space(table, dataset)
    val_rows = np.flatnonzero(dataset.split_mask("validation"))
    names = dataset.inputs.column_names
    ci = {n: i for i, n in enumerate(names)}
    surv1 = list(dataset.outputs.column_names).index("Survived=1")
    pred = model.predict_values(dataset.inputs.values[val_rows])
    sample = next(
        i
        for i, r in enumerate(val_rows)
        if dataset.inputs.values[r][ci["Pclass"]] == 3
        and dataset.inputs.values[r][ci["Sex=male"]] == 1
        and dataset.outputs.values[r][surv1] == 0
        and pred[i, surv1] < 0.5
    )
    expl = lime_explain(
        model, dataset, space, "validation", sample, LimeConfig(seed=0), class_index=surv1
    )
    top2 = {expl.entries[0].feature, expl.entries[1].feature}
    signs_ok = expl.entries[0].attribution < 0 and expl.entries[1].attribution < 0
    lime_ok = top2 == {"Pclass", "Sex"} and signs_ok
    report(
        n_rows == 891 and rank_ok and lime_ok,
        "C6 survival-data reproduction (rank-only)",
        f"{source}, 891 rows, ST gap={strong - weak:+.3f}, LIME top-2={sorted(top2)}",
    )


def test_c7_performance_desk_scale(tmp_path):
    path = tmp_path / "big.csv"
    path.write_text(wide_regression_csv(100_000, 8, seed=0))

    t0 = time.perf_counter()
    table = td.load_csv(path)
    t_load = time.perf_counter() - t0

    table = td.split_random(table, {"train": 1.0, "validation": 0.0, "test": 0.0}, 0)
    table = td.assign_roles(table, [f"x{j}" for j in range(8)], ["y"])
    dataset = td.encode(table, "regression")
    fp = make_fingerprint(table, dataset)
    X, Y = dataset.inputs.values, dataset.outputs.values

    t0 = time.perf_counter()
    model = train(ModelSpec("gradient_boosted_trees", "regression", {}, seed=0), X, Y, fp)
    t_train = time.perf_counter() - t0

    t0 = time.perf_counter()
    err = compute_loss("mse", model.predict_values(X), Y)
    t_err = time.perf_counter() - t0

    t0 = time.perf_counter()
    run_gsa(model, dataset, "train", EfastConfig(seed=0))
    t_gsa = time.perf_counter() - t0

    ok = table.n_rows == 100_000 and t_load < 2 and t_train < 10 and t_err < 2 and t_gsa < 5
    report(
        ok,
        "C7 performance at desk scale (100k rows)",
        f"load={t_load:.2f}s/2s train={t_train:.2f}s/10s error={t_err:.2f}s/2s gsa={t_gsa:.2f}s/5s",
    )


def test_c8_model_persistence_all_families(tmp_path):
    hp = {
        "random_forest": {"n_trees": 5, "max_depth": 8},
        "gradient_boosted_trees": {"rounds": 15},
        "mlp": {"epochs": 5, "hidden_layers": [16, 8]},
        "tabular_resnet": {"epochs": 5, "blocks": 1, "layer_size": 16},
    }
    table, dataset = make_regression_dataset(n=120, fn=lambda X: X[:, 0] * 2 + X[:, 1] ** 2)
    fp = make_fingerprint(table, dataset)
    X, Y = train_arrays(dataset)
    rng = np.random.default_rng(9)
    probe = rng.uniform(-0.5, 1.5, size=(100, X.shape[1]))
    worst = 0.0
    for family, params in hp.items():
        model = train(ModelSpec(family, "regression", params, seed=1), X, Y, fp)
        path = tmp_path / f"{family}.tsmodel"
        save_model(model, path)
        loaded = load_model(path)
        diff = model.predict_values(probe) - loaded.predict_values(probe)
        worst = max(worst, float(np.max(np.abs(diff))))
    report(worst == 0.0, "C8 model persistence all families", f"max abs prediction diff={worst}")


def test_c9_network_gradients():
    table, dataset = make_regression_dataset(n=100, d=2, fn=lambda X: X[:, 0] - X[:, 1])
    fp = make_fingerprint(table, dataset)
    X, Y = train_arrays(dataset)
    mlp = train(
        ModelSpec("mlp", "regression", {"epochs": 4, "hidden_layers": [6, 4]}, seed=0), X, Y, fp
    )
    resnet = train(
        ModelSpec("tabular_resnet", "regression", {"epochs": 4, "blocks": 1, "layer_size": 8}, seed=0),
        X, Y, fp,
    )
    dev_mlp = check_model_gradients(mlp, X[:20], Y[:20])
    dev_res = check_model_gradients(resnet, X[:20], Y[:20])
    report(
        dev_mlp < 1e-4 and dev_res < 1e-4,
        "C9 network gradients vs finite differences",
        f"mlp={dev_mlp:.2e}, resnet={dev_res:.2e}",
    )


def test_c10_api_loop_end_to_end():
    app = create_app(workers=2)
    revisions = []
    with TestClient(app) as client:
        sid = client.post("/api/v1/sessions", json={"seed": 11}).json()["session_id"]
        r = client.post(
            f"/api/v1/sessions/{sid}/dataset",
            json={"csv_text": survival_surrogate(), "role": "all"},
        )
        assert r.status_code == 200
        revisions.append(r.json()["revision"])
        r = client.post(
            f"/api/v1/sessions/{sid}/features",
            json={
                "inputs": SURVIVAL_INPUTS,
                "outputs": [SURVIVAL_OUTPUT],
                "task": "classification",
            },
        )
        assert r.status_code == 200
        revisions.append(r.json()["revision"])
        r = client.post(
            f"/api/v1/sessions/{sid}/models/train",
            json={"family": "gradient_boosted_trees", "hyperparameters": {"rounds": 20}},
        )
        assert r.status_code == 202
        job_id = r.json()["job_id"]
        deadline = time.time() + 120
        while time.time() < deadline:
            doc = client.get(f"/api/v1/jobs/{job_id}").json()
            if doc["status"] in ("done", "failed"):
                break
            time.sleep(0.05)
        assert doc["status"] == "done"
        r = client.post(
            f"/api/v1/sessions/{sid}/evaluate",
            json={"split": "validation", "loss": "binary_cross_entropy"},
        )
        assert r.status_code == 200
        revisions.append(r.json()["revision"])
        gsa_job = r.json()["gsa_job_id"]
        deadline = time.time() + 120
        while time.time() < deadline:
            doc = client.get(f"/api/v1/jobs/{gsa_job}").json()
            if doc["status"] in ("done", "failed"):
                break
            time.sleep(0.05)
        assert doc["status"] == "done"
        r = client.get(f"/api/v1/sessions/{sid}/gsa")
        assert r.status_code == 200 and r.json()["status"] == "done"
        revisions.append(r.json()["revision"])
        r = client.post(
            f"/api/v1/sessions/{sid}/explain",
            json={"split": "validation", "sample_index": 2, "method": "shap"},
        )
        assert r.status_code == 200
        revisions.append(r.json()["revision"])
    ok = revisions == sorted(revisions) and len(set(revisions)) >= 4
    report(ok, "C10 API loop end-to-end", f"revisions={revisions}")
