"""Kernel SHAP vs closed forms and the factorial-enumeration oracle."""
import numpy as np
import pytest

from tabsense.explain import ShapConfig, shap_explain
from tabsense.explain.shapx import kernel_shap, sample_background
from tabsense.explain.space import ExplanationSpace, SpaceFeature
from tabsense.models import ModelSpec, train

from conftest import make_fingerprint, make_regression_dataset, train_arrays
from oracles import background_value_fn, brute_force_shapley


def numeric_space(train_values):
    d = train_values.shape[1]
    names = tuple(f"x{j}" for j in range(d))
    feats = [SpaceFeature(n, "numeric") for n in names]
    return ExplanationSpace(feats, train_values, names)


class TestExactMode:
    def test_linear_model_closed_form(self):
        rng = np.random.default_rng(0)
        beta = np.array([2.0, -1.0, 0.5, 3.0])
        train_values = rng.normal(size=(300, 4))
        space = numeric_space(train_values)
        model_fn = lambda X: X @ beta
        config = ShapConfig(background_size=64, seed=1)
        x = rng.normal(size=4)
        phi, base, exact = kernel_shap(space, x, model_fn, config)
        assert exact
        bg = sample_background(space, config)
        want = beta * (x - bg.mean(axis=0))
        assert np.max(np.abs(phi - want)) < 1e-6
        assert base == pytest.approx(float(bg.mean(axis=0) @ beta), abs=1e-9)

    def test_symmetry_axiom(self):
        train_values = np.array([[1.0, 1.0], [2.0, 2.0], [0.5, 0.5], [3.0, 3.0]])
        space = numeric_space(train_values)
        model_fn = lambda X: X[:, 0] + X[:, 1]
        x = np.array([2.0, 2.0])
        phi, _, _ = kernel_shap(space, x, model_fn, ShapConfig(background_size=4, seed=0))
        assert abs(phi[0] - phi[1]) < 1e-9

    def test_efficiency_exact(self):
        rng = np.random.default_rng(2)
        train_values = rng.normal(size=(100, 5))
        space = numeric_space(train_values)
        model_fn = lambda X: np.sin(X[:, 0]) * X[:, 1] + X[:, 2] ** 2
        config = ShapConfig(background_size=32, seed=0)
        for i in range(10):
            x = rng.normal(size=5)
            phi, base, _ = kernel_shap(space, x, model_fn, config)
            fx = float(model_fn(x[None, :])[0])
            assert abs(base + phi.sum() - fx) < 1e-6

    def test_null_player_zero(self):
        rng = np.random.default_rng(3)
        train_values = rng.normal(size=(80, 3))
        space = numeric_space(train_values)
        model_fn = lambda X: 4.0 * X[:, 0] - X[:, 1]  # ignores x2
        phi, _, _ = kernel_shap(space, rng.normal(size=3), model_fn, ShapConfig(seed=5))
        assert abs(phi[2]) < 1e-6

    def test_linearity_axiom(self):
        rng = np.random.default_rng(4)
        train_values = rng.normal(size=(60, 3))
        space = numeric_space(train_values)
        f = lambda X: X[:, 0] * X[:, 1]
        g = lambda X: np.abs(X[:, 2])
        config = ShapConfig(background_size=60, seed=0)
        x = rng.normal(size=3)
        phi_f, bf, _ = kernel_shap(space, x, f, config)
        phi_g, bg_, _ = kernel_shap(space, x, g, config)
        phi_sum, bs, _ = kernel_shap(space, x, lambda X: f(X) + g(X), config)
        assert np.max(np.abs(phi_sum - (phi_f + phi_g))) < 1e-9
        assert abs(bs - (bf + bg_)) < 1e-9

    def test_feature_order_invariance(self):
        rng = np.random.default_rng(5)
        train_values = rng.normal(size=(50, 4))
        model = lambda X: X[:, 0] * 2 + X[:, 1] * X[:, 3]
        space = numeric_space(train_values)
        x = rng.normal(size=4)
        config = ShapConfig(background_size=50, seed=0)
        phi, _, _ = kernel_shap(space, x, model, config)
        # permuted feature order
        perm = [2, 0, 3, 1]
        space_p = numeric_space(train_values[:, perm])
        model_p = lambda Xp: model(Xp[:, np.argsort(perm)])
        phi_p, _, _ = kernel_shap(space_p, x[perm], model_p, config)
        assert np.max(np.abs(phi[perm] - phi_p)) < 1e-9


class TestAgainstBruteForce:
    def test_boosted_tree_model_d6(self):
        table, dataset = make_regression_dataset(
            n=300, d=6, fn=lambda X: 2 * X[:, 0] + X[:, 1] * X[:, 2] + np.sin(3 * X[:, 3]), seed=6
        )
        fp = make_fingerprint(table, dataset)
        X, Y = train_arrays(dataset)
        model = train(ModelSpec("gradient_boosted_trees", "regression", {"rounds": 25}), X, Y, fp)
        space = numeric_space(X)
        model_fn = lambda rows: model.predict_values(rows)[:, 0]
        config = ShapConfig(background_size=25, seed=0)
        rng = np.random.default_rng(1)
        x = X[17]
        phi, base, exact = kernel_shap(space, x, model_fn, config)
        assert exact
        bg = sample_background(space, config)
        vfn = background_value_fn(model_fn, space.encode_rows, x, bg)
        phi_bf = brute_force_shapley(vfn, 6)
        assert np.max(np.abs(phi - phi_bf)) < 1e-6

    def test_sampling_mode_close_to_exact(self):
        rng = np.random.default_rng(7)
        d = 13  # one above the exact-mode cutoff
        train_values = rng.normal(size=(60, d))
        space = numeric_space(train_values)
        beta = rng.normal(size=d)
        model_fn = lambda X: X @ beta
        x = rng.normal(size=d)
        config = ShapConfig(background_size=30, num_coalitions=4096, seed=0)
        phi, base, exact = kernel_shap(space, x, model_fn, config)
        assert not exact
        bg = sample_background(space, config)
        want = beta * (x - bg.mean(axis=0))
        assert abs(base + phi.sum() - float(model_fn(x[None, :])[0])) < 1e-3
        assert np.max(np.abs(phi - want)) < 0.05 * max(1.0, np.abs(want).max())


class TestShapExplainWrapper:
    def test_classification_explanation_fields(self):
        from conftest import make_classification_dataset
        from tabsense.explain import build_space

        table, dataset = make_classification_dataset(n=150, seed=8)
        fp = make_fingerprint(table, dataset)
        X, Y = train_arrays(dataset)
        model = train(ModelSpec("random_forest", "classification", {"n_trees": 5}), X, Y, fp)
        space = build_space(table, dataset)
        expl = shap_explain(model, dataset, space, "validation", 0, ShapConfig(seed=0))
        assert expl.method == "shap"
        assert expl.base_value is not None
        assert len(expl.entries) == 2
        assert expl.ground_truth in ("pos", "neg")
        total = expl.base_value + sum(e.attribution for e in expl.entries)
        target_idx = list(dataset.outputs.column_names).index(
            "label=" + str(expl.predicted_label)
        )
        assert total == pytest.approx(expl.prediction[target_idx], abs=1e-6)

    def test_sample_out_of_range(self):
        from tabsense.explain import ExplainError, build_space

        table, dataset = make_regression_dataset(n=40)
        fp = make_fingerprint(table, dataset)
        X, Y = train_arrays(dataset)
        model = train(ModelSpec("random_forest", "regression", {"n_trees": 2}), X, Y, fp)
        space = build_space(table, dataset)
        with pytest.raises(ExplainError, match="valid range"):
            shap_explain(model, dataset, space, "validation", 10_000)
