import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from tabsense import data as td


@pytest.fixture
def tiny_csv(tmp_path):
    p = tmp_path / "tiny.csv"
    p.write_text(
        "x,color,y\n"
        "1.0,red,2.0\n"
        "2.0,blue,4.0\n"
        "3.0,red,6.0\n"
        "4.0,green,8.0\n"
        "5.0,blue,10.0\n"
        "6.0,red,12.0\n"
    )
    return p


def make_regression_dataset(n=200, d=3, seed=0, fn=None, noise=0.0):
    """DataTable + EncodedDataset for y = fn(X) on uniform inputs."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n, d))
    if fn is None:
        fn = lambda X: 3.0 * X[:, 0]
    y = fn(X) + (rng.normal(scale=noise, size=n) if noise else 0.0)
    header = ",".join([f"x{j}" for j in range(d)] + ["y"])
    lines = [header]
    for i in range(n):
        lines.append(",".join(repr(float(v)) for v in X[i]) + f",{float(y[i])!r}")
    table = td.load_csv_text("\n".join(lines))
    table = td.split_random(table, {"train": 0.7, "validation": 0.15, "test": 0.15}, seed=seed)
    table = td.assign_roles(table, [f"x{j}" for j in range(d)], ["y"])
    dataset = td.encode(table, "regression")
    return table, dataset


def make_fingerprint(table, dataset, normalization="none"):
    from tabsense.models import FeatureFingerprint, schema_hash

    return FeatureFingerprint(
        dataset.inputs.column_names,
        dataset.outputs.column_names,
        normalization,
        schema_hash(table.features_with_role("input"), table.features_with_role("output")),
    )


def train_arrays(dataset):
    mask = dataset.split_mask("train")
    return dataset.inputs.values[mask], dataset.outputs.values[mask]


def make_classification_dataset(n=240, seed=0):
    """XOR-pattern binary classification over two numeric inputs (points
    stay off the axes so the quadrant label is unambiguous)."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.1, 1.0, size=(n, 2)) * rng.choice([-1.0, 1.0], size=(n, 2))
    labels = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)
    lines = ["a,b,label"]
    for i in range(n):
        lines.append(f"{float(X[i, 0])!r},{float(X[i, 1])!r},{'pos' if labels[i] else 'neg'}")
    table = td.load_csv_text("\n".join(lines))
    table = td.split_random(table, {"train": 0.8, "validation": 0.1, "test": 0.1}, seed=seed)
    table = td.assign_roles(table, ["a", "b"], ["label"])
    dataset = td.encode(table, "classification")
    return table, dataset
