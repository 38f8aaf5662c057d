"""Bundled synthetic datasets.

``survival_surrogate`` mirrors the public Titanic train file's shape: the
same columns, 891 rows, 549 non-survivors to 342 survivors, missing ages,
and survival driven strongly by sex, passenger class, age, and
siblings-or-spouse, with fare and parents-or-children nearly irrelevant.
It stands in for the real file when that cannot be fetched; checks against
it are rank-level only.
"""
from __future__ import annotations

import io

import numpy as np

SURVIVAL_COLUMNS = [
    "PassengerId",
    "Survived",
    "Pclass",
    "Name",
    "Sex",
    "Age",
    "SibSp",
    "Parch",
    "Ticket",
    "Fare",
    "Cabin",
    "Embarked",
]
SURVIVAL_INPUTS = ["Pclass", "Sex", "Age", "SibSp", "Parch", "Fare"]
SURVIVAL_OUTPUT = "Survived"

_ROWS = 891
_DIED = 549


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def survival_surrogate(seed: int = 0) -> str:
    """CSV text of the synthetic passenger-survival dataset."""
    rng = np.random.default_rng(seed)
    n = _ROWS
    pclass = rng.choice([1, 2, 3], size=n, p=[0.24, 0.21, 0.55])
    sex = rng.choice(["male", "female"], size=n, p=[0.65, 0.35])
    age = np.clip(rng.normal(29.0, 13.0, size=n), 1.0, 80.0).round(1)
    age_missing = rng.random(n) < 0.198
    sibsp = rng.choice([0, 1, 2, 3, 4, 5], size=n, p=[0.60, 0.25, 0.07, 0.04, 0.02, 0.02])
    parch = rng.choice([0, 1, 2, 3], size=n, p=[0.76, 0.13, 0.09, 0.02])
    # fare carries no signal; keeping it independent of class stops tree
    # models from leaning on it as a class proxy
    fare = (30.0 * np.exp(rng.normal(0.0, 0.7, size=n))).round(4)
    embarked = rng.choice(["S", "C", "Q"], size=n, p=[0.72, 0.19, 0.09])

    female = (sex == "female").astype(float)
    logit = (
        -0.15
        + 1.9 * female
        + 1.05 * (2.0 - pclass)
        + 0.030 * (28.0 - age)
        - 0.62 * np.minimum(sibsp, 3)
        + 0.04 * np.minimum(parch, 2)
    )
    p = _sigmoid(logit)
    score = p - rng.random(n)
    survived = np.zeros(n, dtype=int)
    survived[np.argsort(-score)[: n - _DIED]] = 1

    buf = io.StringIO()
    buf.write(",".join(SURVIVAL_COLUMNS) + "\n")
    for i in range(n):
        row = [
            str(i + 1),
            str(survived[i]),
            str(pclass[i]),
            f"Passenger {i + 1:03d}",
            sex[i],
            "" if age_missing[i] else str(age[i]),
            str(sibsp[i]),
            str(parch[i]),
            f"T{100000 + i}",
            str(fare[i]),
            "",
            embarked[i],
        ]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def ishigami_csv(n: int = 20000, seed: int = 0, a: float = 7.0, b: float = 0.1) -> str:
    """Samples of the Ishigami benchmark on [-pi, pi]^3 as CSV text."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-np.pi, np.pi, size=(n, 3))
    y = np.sin(x[:, 0]) + a * np.sin(x[:, 1]) ** 2 + b * x[:, 2] ** 4 * np.sin(x[:, 0])
    lines = ["x1,x2,x3,y"]
    for i in range(n):
        lines.append(
            f"{float(x[i, 0])!r},{float(x[i, 1])!r},{float(x[i, 2])!r},{float(y[i])!r}"
        )
    return "\n".join(lines) + "\n"


def wide_regression_csv(n: int = 100_000, d: int = 8, seed: int = 0) -> str:
    """Large numeric table for throughput checks: y mixes linear, curved,
    and interaction terms over d uniform inputs."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n, d))
    y = (
        3.0 * X[:, 0]
        + np.sin(4.0 * X[:, 1])
        + X[:, 2] * X[:, 3]
        + 0.5 * X[:, 4] ** 2
        + rng.normal(scale=0.05, size=n)
    )
    header = ",".join([f"x{j}" for j in range(d)] + ["y"])
    out = [header]
    body = np.column_stack([X, y])
    for row in body:
        out.append(",".join(f"{v:.9g}" for v in row))
    return "\n".join(out) + "\n"
