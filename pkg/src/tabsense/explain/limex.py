"""LIME over quartile-discretized tabular features.

Numeric features are discretized into train-split quartile bins; a
perturbation draws a bin uniformly and then a truncated normal fitted to
the train data inside it. Categorical features resample from the train
category frequencies. The interpretable representation marks whether each
perturbed value stayed in the instance's bin (same category), and a
kernel-weighted ridge regression of the model output on that binary
representation yields the attribution per feature. The instance's own bin
edges are reported as its decision thresholds.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .space import ExplainError, ExplanationSpace


@dataclass(frozen=True)
class LimeConfig:
    num_samples: int = 5000
    num_features: int = 6
    kernel_width: float | None = None  # None -> 0.75 * sqrt(d)
    ridge: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.num_samples < 100:
            raise ExplainError("lime needs at least 100 perturbation samples")
        if self.num_features < 1:
            raise ExplainError("num_features must be >= 1")


@dataclass(frozen=True)
class _NumericBins:
    edges: np.ndarray  # interior quartile edges, deduplicated
    means: np.ndarray  # per-bin train mean
    stds: np.ndarray  # per-bin train std
    occupied: np.ndarray  # bins that contain train data

    def bin_of(self, x) -> np.ndarray:
        return np.searchsorted(self.edges, x, side="left")

    def bounds(self, b: int) -> tuple[float, float]:
        lo = -np.inf if b == 0 else float(self.edges[b - 1])
        hi = np.inf if b == len(self.edges) else float(self.edges[b])
        return lo, hi


def _fit_bins(train_col: np.ndarray) -> _NumericBins:
    edges = np.unique(np.quantile(train_col, (0.25, 0.5, 0.75)))
    n_bins = edges.size + 1
    codes = np.searchsorted(edges, train_col, side="left")
    means = np.zeros(n_bins)
    stds = np.zeros(n_bins)
    occupied = np.zeros(n_bins, dtype=bool)
    for b in range(n_bins):
        vals = train_col[codes == b]
        if vals.size:
            occupied[b] = True
            means[b] = vals.mean()
            stds[b] = vals.std()
    return _NumericBins(edges, means, stds, occupied)


def _truncated_normal(rng, mean, std, lo, hi, size) -> np.ndarray:
    if std <= 0:
        return np.full(size, np.clip(mean, lo, hi))
    a = ndtr((lo - mean) / std)
    b = ndtr((hi - mean) / std)
    u = rng.uniform(a, b, size=size)
    return mean + std * ndtri(np.clip(u, 1e-12, 1.0 - 1e-12))


def lime_attributions(
    space: ExplanationSpace,
    instance: np.ndarray,
    model_fn,
    config: LimeConfig,
):
    """Core LIME: (per-feature coefficients, instance bins, warnings).

    ``model_fn`` maps encoded rows to the scalar being explained.
    """
    rng = np.random.default_rng(config.seed)
    d = space.d
    n = config.num_samples
    sigma = config.kernel_width if config.kernel_width is not None else 0.75 * np.sqrt(d)

    perturbed = np.empty((n, d))
    z = np.zeros((n, d))
    instance_bins: list[_NumericBins | None] = []
    for j, feat in enumerate(space.features):
        col = space.train_values[:, j]
        if feat.kind == "categorical":
            instance_bins.append(None)
            counts = np.bincount(col.astype(np.int64), minlength=len(feat.categories))
            probs = counts / counts.sum()
            draws = rng.choice(len(feat.categories), size=n, p=probs)
            perturbed[:, j] = draws
            z[:, j] = draws == int(instance[j])
        else:
            bins = _fit_bins(col)
            instance_bins.append(bins)
            inst_bin = int(bins.bin_of(instance[j]))
            live = np.flatnonzero(bins.occupied)
            chosen = live[rng.integers(0, live.size, size=n)]
            vals = np.empty(n)
            for b in live:
                rows = np.flatnonzero(chosen == b)
                if rows.size:
                    lo, hi = bins.bounds(int(b))
                    vals[rows] = _truncated_normal(
                        rng, bins.means[b], bins.stds[b], lo, hi, rows.size
                    )
            perturbed[:, j] = vals
            z[:, j] = chosen == inst_bin
    # row 0 is the instance itself
    perturbed[0] = instance
    z[0] = 1.0

    y = np.asarray(model_fn(space.encode_rows(perturbed)), dtype=np.float64).ravel()
    warnings: list[str] = []
    if float(y.std()) == 0.0:
        warnings.append("model is constant over the perturbation neighborhood")
        return np.zeros(d), instance_bins, warnings

    dist_sq = (1.0 - z).sum(axis=1)  # squared euclidean distance to all-ones
    w = np.exp(-dist_sq / (sigma * sigma))
    A = np.hstack([np.ones((n, 1)), z])
    Aw = A * w[:, None]
    gram = A.T @ Aw
    reg = np.eye(d + 1) * config.ridge
    reg[0, 0] = 0.0  # intercept unpenalized
    beta = np.linalg.solve(gram + reg, A.T @ (w * y))
    return beta[1:], instance_bins, warnings
