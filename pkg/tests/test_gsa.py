"""eFAST indices vs analytic and Saltelli/Jansen oracles."""
import numpy as np
import pytest

from tabsense import data as td
from tabsense.gsa import EfastConfig, GsaError, efast_design, efast_indices, run_gsa
from tabsense.models import ModelSpec, train

from conftest import make_fingerprint, make_regression_dataset, train_arrays
from oracles import ishigami, ishigami_analytic, saltelli_jansen


def analyze_function(fn, d, config, bounds=None):
    """Run the eFAST estimator on a plain python function over [0,1]^d."""
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
    return s1, st, total, constant


class TestDesign:
    def test_frequency_assignment_d3(self):
        config = EfastConfig(samples_per_curve=65, interference_factor=4, resamples=1)
        assert config.omega_hi == 8
        curves = efast_design(config, 3)
        assert len(curves) == 3
        for curve in curves:
            assert curve.frequencies[curve.foi] == 8
            others = np.delete(curve.frequencies, curve.foi)
            assert set(others.tolist()) == {1}

    def test_points_stay_in_unit_interval(self):
        config = EfastConfig(resamples=2, seed=3)
        for curve in efast_design(config, 4):
            assert curve.unit_points.min() >= 0.0
            assert curve.unit_points.max() <= 1.0

    def test_same_seed_identical_design(self):
        config = EfastConfig(seed=42, resamples=2)
        a = efast_design(config, 3)
        b = efast_design(config, 3)
        for ca, cb in zip(a, b):
            assert np.array_equal(ca.unit_points, cb.unit_points)
            assert np.array_equal(ca.frequencies, cb.frequencies)

    def test_constraint_violations_rejected(self):
        with pytest.raises(GsaError):
            EfastConfig(samples_per_curve=33, interference_factor=4)
        with pytest.raises(GsaError):
            EfastConfig(samples_per_curve=66, interference_factor=4)
        with pytest.raises(GsaError):
            efast_design(EfastConfig(), 0)


class TestIndices:
    def test_single_variable_model(self):
        config = EfastConfig(seed=0, resamples=10)
        s1, st, _, _ = analyze_function(lambda x: x[:, 0], 2, config)
        assert s1[0] == pytest.approx(1.0, abs=0.05)
        assert st[0] == pytest.approx(1.0, abs=0.05)
        assert s1[1] == pytest.approx(0.0, abs=0.05)
        assert st[1] == pytest.approx(0.0, abs=0.05)

    def test_ishigami_matches_analytic(self):
        s1_true, st_true, _ = ishigami_analytic()
        config = EfastConfig(samples_per_curve=65, interference_factor=4, resamples=10, seed=0)
        bounds = [(-np.pi, np.pi)] * 3
        s1, st, _, _ = analyze_function(ishigami, 3, config, bounds)
        assert np.max(np.abs(s1 - s1_true)) < 0.05
        assert abs(st[2] - st_true[2]) < 0.05

    def test_constant_model_reports_zeros(self):
        config = EfastConfig(resamples=2)
        s1, st, total, constant = analyze_function(lambda x: np.full(x.shape[0], 3.0), 2, config)
        assert constant
        assert np.all(s1 == 0.0)
        assert np.all(st == 0.0)

    def test_additive_model_no_interaction(self):
        config = EfastConfig(resamples=10, seed=1)
        s1, st, _, _ = analyze_function(lambda x: x[:, 0] + x[:, 1], 2, config)
        assert np.all(np.abs(st - s1) < 0.05)
        assert s1.sum() == pytest.approx(1.0, abs=0.1)

    def test_matches_saltelli_oracle_on_product(self):
        fn = lambda x: x[:, 0] * x[:, 1]
        bounds = [(-1.0, 1.0)] * 2
        config = EfastConfig(resamples=10, seed=0)
        s1, st, _, _ = analyze_function(fn, 2, config, bounds)
        s1_ref, st_ref = saltelli_jansen(fn, 2, n=2**14, seed=1, bounds=bounds)
        assert np.max(np.abs(s1 - s1_ref)) < 0.05
        assert np.max(np.abs(st - st_ref)) < 0.05
        # interaction signal: low main effects, high totals
        assert np.all(s1 < 0.1)
        assert np.all(st > 0.4)

    def test_matches_saltelli_oracle_on_mixed(self):
        fn = lambda x: x[:, 0] + 0.5 * x[:, 1] ** 2
        config = EfastConfig(resamples=10, seed=0)
        s1, st, _, _ = analyze_function(fn, 2, config)
        s1_ref, st_ref = saltelli_jansen(fn, 2, n=2**14, seed=2)
        assert np.max(np.abs(s1 - s1_ref)) < 0.05
        assert np.max(np.abs(st - st_ref)) < 0.05

    def test_wrong_curve_length_rejected(self):
        config = EfastConfig(resamples=1)
        curves = efast_design(config, 2)
        with pytest.raises(GsaError):
            efast_indices([(curves[0], np.zeros(7))], config, 2)


class TestRunGsa:
    def test_range_invariants_on_trained_model(self):
        table, dataset = make_regression_dataset(
            n=400, d=3, fn=lambda X: X[:, 0] + 0.5 * X[:, 1] * X[:, 2], seed=2
        )
        fp = make_fingerprint(table, dataset)
        X, Y = train_arrays(dataset)
        model = train(ModelSpec("gradient_boosted_trees", "regression", {"rounds": 40}), X, Y, fp)
        result = run_gsa(model, dataset, "train", EfastConfig(resamples=6, seed=0))
        entries = result.outputs["y"]
        for e in entries:
            assert -0.05 <= e.s1 <= e.st + 0.05
            assert e.st <= 1.05

    def test_irrelevant_input_scores_near_zero(self):
        # x2 never used by the model: train on a target that ignores it and
        # verify the trees prove it, then check the indices
        table, dataset = make_regression_dataset(n=500, d=3, fn=lambda X: np.sin(3 * X[:, 0]) + X[:, 1], seed=4)
        fp = make_fingerprint(table, dataset)
        X, Y = train_arrays(dataset)
        model = train(ModelSpec("gradient_boosted_trees", "regression", {"rounds": 60}), X, Y, fp)
        used = model.used_feature_indices()
        result = run_gsa(
            model,
            dataset,
            "train",
            EfastConfig(samples_per_curve=257, interference_factor=4, resamples=6, seed=0),
        )
        entries = result.outputs["y"]
        if 2 not in used:
            assert entries[2].s1 < 0.05
            assert entries[2].st < 0.05

    def test_determinism_given_seed(self):
        table, dataset = make_regression_dataset(n=200, d=2, fn=lambda X: X[:, 0] * X[:, 1])
        fp = make_fingerprint(table, dataset)
        X, Y = train_arrays(dataset)
        model = train(ModelSpec("random_forest", "regression", {"n_trees": 5}), X, Y, fp)
        r1 = run_gsa(model, dataset, "train", EfastConfig(seed=7, resamples=3))
        r2 = run_gsa(model, dataset, "train", EfastConfig(seed=7, resamples=3))
        assert r1.to_dict() == r2.to_dict()

    def test_constant_column_excluded_with_zero_index(self):
        lines = ["a,b,y"]
        rng = np.random.default_rng(0)
        for _ in range(100):
            x = rng.random()
            lines.append(f"{x!r},1.0,{2 * x!r}")
        table = td.load_csv_text("\n".join(lines))
        table = td.split_random(table, {"train": 1.0, "validation": 0, "test": 0}, 0)
        table = td.assign_roles(table, ["a", "b"], ["y"])
        dataset = td.encode(table, "regression")
        fp = make_fingerprint(table, dataset)
        X, Y = train_arrays(dataset)
        model = train(ModelSpec("gradient_boosted_trees", "regression", {"rounds": 20}), X, Y, fp)
        result = run_gsa(model, dataset, "train", EfastConfig(resamples=2))
        by_name = {e.input_name: e for e in result.outputs["y"]}
        assert by_name["b"].s1 == 0.0
        assert by_name["b"].st == 0.0
        assert any("constant input columns" in w for w in result.warnings)

    def test_empty_split_rejected(self):
        table, dataset = make_regression_dataset(n=30)
        fp = make_fingerprint(table, dataset)
        X, Y = train_arrays(dataset)
        model = train(ModelSpec("random_forest", "regression", {"n_trees": 2}), X, Y, fp)
        lines = ["x0,x1,x2,y"] + ["0.1,0.2,0.3,1.0"] * 10
        t2 = td.load_csv_text("\n".join(lines), role_hint="train")
        t2 = td.assign_roles(t2, ["x0", "x1", "x2"], ["y"])
        ds2 = td.encode(t2, "regression")
        with pytest.raises(GsaError):
            run_gsa(model, ds2, "test")

    def test_refined_features_redistribute_indices(self):
        from tabsense.datasets import SURVIVAL_INPUTS, survival_surrogate

        def gsa_for(inputs):
            table = td.load_csv_text(survival_surrogate())
            table = td.split_random(
                table, {"train": 0.7, "validation": 0.15, "test": 0.15}, 0
            )
            table = td.assign_roles(table, inputs, ["Survived"])
            dataset = td.encode(table, "classification")
            fp = make_fingerprint(table, dataset)
            mask = dataset.split_mask("train")
            model = train(
                ModelSpec("gradient_boosted_trees", "classification", {"rounds": 50}, seed=0),
                dataset.inputs.values[mask],
                dataset.outputs.values[mask],
                fp,
            )
            result = run_gsa(
                model, dataset, "validation",
                EfastConfig(samples_per_curve=257, resamples=10, seed=0),
            )
            return {e.input_name: e for e in result.outputs["Survived=1"]}

        full = gsa_for(SURVIVAL_INPUTS)
        refined = gsa_for(["Pclass", "Sex", "Age", "SibSp"])
        # the analysis now covers exactly the remaining encoded inputs
        assert set(refined) == {"Pclass", "Sex=male", "Sex=female", "Age", "SibSp"}
        # and the sensitivity mass moves onto the strongest kept features
        assert refined["Pclass"].s1 > full["Pclass"].s1
        assert refined["Age"].s1 > full["Age"].s1
        assert refined["Pclass"].st > full["Pclass"].st

    def test_csv_serialization_shape(self):
        table, dataset = make_regression_dataset(n=100, d=2)
        fp = make_fingerprint(table, dataset)
        X, Y = train_arrays(dataset)
        model = train(ModelSpec("random_forest", "regression", {"n_trees": 3}), X, Y, fp)
        result = run_gsa(model, dataset, "train", EfastConfig(resamples=2))
        csv_text = result.to_csv()
        lines = csv_text.strip().split("\n")
        assert lines[0] == "input,output,s1,st"
        assert len(lines) == 1 + 2  # two inputs, one output
