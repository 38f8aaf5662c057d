"""Random forest over exact-greedy CART trees.

Split criterion is Gini impurity decrease for classification and variance
reduction for regression. Candidate thresholds are midpoints between
consecutive distinct sorted values; ties break toward the lowest column
index, then the lowest threshold. Feature subsets are drawn per node; if
no sampled feature yields a usable split the search widens to every
feature, so a single unbootstrapped full-depth tree drives training error
to zero whenever no two rows share inputs but disagree on outputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..data import NormalizationParams
from .base import (
    FeatureFingerprint,
    FeatureSpace,
    ModelSpec,
    TrainedModel,
    register_family,
    validate_training_inputs,
)

_GAIN_EPS = 1e-12


@dataclass
class _FlatTree:
    feature: np.ndarray  # int32, -1 for leaves
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    value: np.ndarray  # (nodes, out_dim)

    def predict(self, X: np.ndarray) -> np.ndarray:
        idx = np.zeros(X.shape[0], dtype=np.int32)
        pending = self.feature[idx] >= 0
        while pending.any():
            rows = np.flatnonzero(pending)
            node = idx[rows]
            go_left = X[rows, self.feature[node]] <= self.threshold[node]
            idx[rows] = np.where(go_left, self.left[node], self.right[node])
            pending[rows] = self.feature[idx[rows]] >= 0
        return self.value[idx]

    def used_features(self) -> set[int]:
        return set(int(f) for f in self.feature if f >= 0)


class _TreeBuilder:
    def __init__(self, X, Y, max_depth, features_per_split, rng, classification):
        self.X = X
        self.Y = Y  # one-hot counts for classification, raw targets for regression
        self.max_depth = max_depth
        self.k = features_per_split
        self.rng = rng
        self.classification = classification
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[np.ndarray] = []

    def _leaf_value(self, rows) -> np.ndarray:
        y = self.Y[rows]
        if self.classification:
            dist = y.sum(axis=0)
            return dist / dist.sum()
        return y.mean(axis=0)

    def _best_split_for(self, rows, j):
        x = self.X[rows, j]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        if xs[0] == xs[-1]:
            return None
        ys = self.Y[rows][order]
        m = xs.shape[0]
        cum = np.cumsum(ys, axis=0)
        total = cum[-1]
        pos = np.flatnonzero(xs[:-1] < xs[1:])  # split between pos and pos+1
        if pos.size == 0:
            return None
        mL = (pos + 1).astype(np.float64)
        mR = m - mL
        sL = cum[pos]
        sR = total[None, :] - sL
        score = (sL * sL).sum(axis=1) / mL + (sR * sR).sum(axis=1) / mR
        base = float(np.dot(total, total)) / m
        gains = score - base
        best = int(np.argmax(gains))
        if gains[best] <= _GAIN_EPS:
            return None
        thr = 0.5 * (xs[pos[best]] + xs[pos[best] + 1])
        return float(gains[best]), float(thr)

    def _find_split(self, rows):
        d = self.X.shape[1]
        k = min(self.k, d)
        sampled = np.sort(self.rng.choice(d, size=k, replace=False))
        best = None
        for j in sampled:
            cand = self._best_split_for(rows, int(j))
            if cand is not None and (best is None or cand[0] > best[0]):
                best = (cand[0], int(j), cand[1])
        if best is None and k < d:
            for j in range(d):
                if j in sampled:
                    continue
                cand = self._best_split_for(rows, j)
                if cand is not None and (best is None or cand[0] > best[0]):
                    best = (cand[0], j, cand[1])
        return best

    def build(self, rows) -> int:
        node = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(self._leaf_value(rows))
        return self._grow(node, rows, depth=0)

    def _grow(self, node, rows, depth) -> int:
        if depth >= self.max_depth or rows.shape[0] < 2:
            return node
        y = self.Y[rows]
        if self.classification:
            if (y.sum(axis=0) > 0).sum() <= 1:
                return node
        elif np.all(y == y[0]):
            return node
        found = self._find_split(rows)
        if found is None:
            return node
        _, j, thr = found
        go_left = self.X[rows, j] <= thr
        left_rows = rows[go_left]
        right_rows = rows[~go_left]
        self.feature[node] = j
        self.threshold[node] = thr
        for child_rows, side in ((left_rows, "left"), (right_rows, "right")):
            child = len(self.feature)
            self.feature.append(-1)
            self.threshold.append(0.0)
            self.left.append(-1)
            self.right.append(-1)
            self.value.append(self._leaf_value(child_rows))
            if side == "left":
                self.left[node] = child
            else:
                self.right[node] = child
            self._grow(child, child_rows, depth + 1)
        return node

    def flat(self) -> _FlatTree:
        return _FlatTree(
            np.asarray(self.feature, dtype=np.int32),
            np.asarray(self.threshold, dtype=np.float64),
            np.asarray(self.left, dtype=np.int32),
            np.asarray(self.right, dtype=np.int32),
            np.vstack(self.value),
        )


@register_family("random_forest")
class RandomForestModel(TrainedModel):
    def __init__(self, spec, fingerprint, normalization, history, space, trees):
        super().__init__(spec, fingerprint, normalization, history, space)
        self.trees: list[_FlatTree] = trees

    def predict_values(self, values: np.ndarray) -> np.ndarray:
        acc = self.trees[0].predict(values).copy()
        for tree in self.trees[1:]:
            acc += tree.predict(values)
        return acc / len(self.trees)

    def used_feature_indices(self) -> set[int]:
        used: set[int] = set()
        for t in self.trees:
            used |= t.used_features()
        return used

    def parameters_dict(self) -> dict:
        return {
            "trees": [
                {
                    "feature": t.feature,
                    "threshold": t.threshold,
                    "left": t.left,
                    "right": t.right,
                    "value": t.value,
                }
                for t in self.trees
            ]
        }

    @classmethod
    def from_parameters(cls, spec, fingerprint, normalization, history, space, params):
        trees = [
            _FlatTree(
                t["feature"].astype(np.int32),
                t["threshold"].astype(np.float64),
                t["left"].astype(np.int32),
                t["right"].astype(np.int32),
                t["value"].astype(np.float64),
            )
            for t in params["trees"]
        ]
        return cls(spec, fingerprint, normalization, history, space, trees)


def train_random_forest(
    spec: ModelSpec,
    X: np.ndarray,
    Y: np.ndarray,
    fingerprint: FeatureFingerprint,
    feature_space: FeatureSpace | None = None,
    progress=None,
) -> RandomForestModel:
    validate_training_inputs(X, Y)
    hp = spec.hyperparameters
    n, d = X.shape
    classification = spec.task == "classification"
    k = hp["features_per_split"] or math.ceil(math.sqrt(d))
    trees = []
    n_trees = int(hp["n_trees"])
    for t in range(n_trees):
        rng = np.random.default_rng([spec.seed, t])
        rows = rng.integers(0, n, size=n) if hp["bootstrap"] else np.arange(n)
        builder = _TreeBuilder(X, Y, int(hp["max_depth"]), k, rng, classification)
        builder.build(np.asarray(rows))
        trees.append(builder.flat())
        if progress:
            progress((t + 1) / n_trees)
    return RandomForestModel(
        spec, fingerprint, NormalizationParams.identity(d), [], feature_space, trees
    )
