"""Wire payload rendering of explanations: the raw/normalized toggle."""
import numpy as np
import pytest

from tabsense import data as td
from tabsense.explain import ShapConfig, build_space, explanation_payload, shap_explain
from tabsense.models import ModelSpec, train

from conftest import make_fingerprint, train_arrays


@pytest.fixture()
def normalized_session():
    rng = np.random.default_rng(0)
    lines = ["x,y"]
    for i in range(80):
        x = float(rng.uniform(0.0, 10.0))
        lines.append(f"{x!r},{x * 2 + 1!r}")
    table = td.load_csv_text("\n".join(lines))
    table = td.split_random(table, {"train": 0.8, "validation": 0.2, "test": 0.0}, 0)
    table = td.assign_roles(table, ["x"], ["y"])
    dataset = td.encode(table, "regression")
    norm = td.fit_normalizer(dataset.inputs.values, "min_max", dataset.split_mask("train"))
    fp = make_fingerprint(table, dataset, normalization="min_max")
    X, Y = train_arrays(dataset)
    model = train(ModelSpec("random_forest", "regression", {"n_trees": 3}), X, Y, fp,
                  normalization=norm)
    space = build_space(table, dataset, norm)
    expl = shap_explain(model, dataset, space, "validation", 0, ShapConfig(seed=0))
    return expl, norm, dataset


def test_toggle_changes_values_not_attributions(normalized_session):
    expl, norm, dataset = normalized_session
    raw = explanation_payload(expl, normalized=False)
    normed = explanation_payload(expl, normalized=True)
    assert raw["entries"][0]["attribution"] == normed["entries"][0]["attribution"]
    x_raw = raw["entries"][0]["value"]
    x_norm = normed["entries"][0]["value"]
    # min_max rendering: (value - train min) / (train max - train min)
    assert x_norm == pytest.approx((x_raw - norm.offset[0]) / norm.scale[0])


def test_toggle_twice_is_identity(normalized_session):
    expl, _, _ = normalized_session
    once = explanation_payload(expl, normalized=True)
    explanation_payload(expl, normalized=False)  # toggle away
    again = explanation_payload(expl, normalized=True)  # and back
    assert once == again


def test_unnormalized_session_both_spaces_identical():
    rng = np.random.default_rng(1)
    lines = ["a,b,y"]
    for _ in range(60):
        a, b = rng.uniform(0, 1, size=2)
        lines.append(f"{float(a)!r},{float(b)!r},{float(a + b)!r}")
    table = td.load_csv_text("\n".join(lines))
    table = td.split_random(table, {"train": 0.8, "validation": 0.2, "test": 0.0}, 0)
    table = td.assign_roles(table, ["a", "b"], ["y"])
    dataset = td.encode(table, "regression")
    fp = make_fingerprint(table, dataset)
    X, Y = train_arrays(dataset)
    model = train(ModelSpec("random_forest", "regression", {"n_trees": 2}), X, Y, fp)
    space = build_space(table, dataset, None)
    expl = shap_explain(model, dataset, space, "validation", 0, ShapConfig(seed=0))
    raw = explanation_payload(expl, normalized=False)
    normed = explanation_payload(expl, normalized=True)
    assert [e["value"] for e in raw["entries"]] == [e["value"] for e in normed["entries"]]


def test_denormalization_example():
    # normalized 0.5 with train min 0, max 10 renders back to 5.0
    params = td.NormalizationParams("min_max", np.array([0.0]), np.array([10.0]))
    assert params.invert(np.array([0.5]))[0] == pytest.approx(5.0)
