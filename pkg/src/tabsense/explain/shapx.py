"""Kernel SHAP with exact small-dimension mode.

The value of a coalition is the model output with present features pinned
to the instance and absent features marginalized over a background sample
of train rows. Up to ``max_exact_dim`` features every coalition is
enumerated, making the kernel-weighted least squares solve equal to the
exact Shapley values; beyond that, coalitions are drawn by Shapley-kernel
mass with paired complements. The efficiency constraint (base value plus
attributions equals the prediction) is enforced exactly by eliminating
one unknown.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .space import ExplainError, ExplanationSpace


@dataclass(frozen=True)
class ShapConfig:
    background_size: int = 100
    max_exact_dim: int = 12
    num_coalitions: int = 2048
    seed: int = 0

    def __post_init__(self):
        if self.background_size < 1:
            raise ExplainError("shap needs a nonempty background sample")
        if self.num_coalitions < 4:
            raise ExplainError("num_coalitions too small")


def sample_background(space: ExplanationSpace, config: ShapConfig) -> np.ndarray:
    n = space.train_values.shape[0]
    if n == 0:
        raise ExplainError("empty background: no train rows")
    take = min(config.background_size, n)
    rng = np.random.default_rng(config.seed)
    rows = rng.choice(n, size=take, replace=False)
    return space.train_values[rows]


def coalition_values(
    space: ExplanationSpace,
    instance: np.ndarray,
    background: np.ndarray,
    model_fn,
    masks: np.ndarray,
) -> np.ndarray:
    """Mean model output per coalition mask, absent features marginalized
    over the background rows."""
    b = background.shape[0]
    out = np.empty(masks.shape[0])
    chunk = max(1, 65536 // b)
    for start in range(0, masks.shape[0], chunk):
        sel = masks[start : start + chunk]
        rows = np.where(sel[:, None, :], instance[None, None, :], background[None, :, :])
        flat = rows.reshape(-1, space.d)
        y = np.asarray(model_fn(space.encode_rows(flat)), dtype=np.float64).ravel()
        out[start : start + chunk] = y.reshape(sel.shape[0], b).mean(axis=1)
    return out


def _all_masks(d: int) -> np.ndarray:
    codes = np.arange(2**d, dtype=np.uint32)
    return (codes[:, None] >> np.arange(d)[None, :]) & 1 > 0


def _kernel_weight(d: int, s: np.ndarray) -> np.ndarray:
    c = np.array([comb(d, int(k)) for k in s], dtype=np.float64)
    return (d - 1) / (c * s * (d - s))


def _sampled_masks(d: int, budget: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Coalition masks and WLS weights for the sampling regime.

    Complete size pairs are enumerated from the outside in while the budget
    allows (their exact kernel mass as weights); the remaining budget is
    filled with paired random draws from the leftover sizes.
    """
    masks: list[np.ndarray] = []
    weights: list[float] = []
    sizes = list(range(1, d))
    mass = {s: (d - 1) / (s * (d - s)) for s in sizes}
    remaining = budget
    enumerated: set[int] = set()
    for s in sorted(sizes, key=lambda s: min(s, d - s)):
        if s in enumerated:
            continue
        pair = {s, d - s}
        count = sum(comb(d, p) for p in pair)
        if count > remaining:
            continue
        for p in pair:
            base = np.zeros(d, dtype=bool)
            idx = list(range(p))
            while True:
                m = base.copy()
                m[idx] = True
                masks.append(m)
                weights.append(mass[p] / comb(d, p))
                # next combination in lexicographic order
                i = p - 1
                while i >= 0 and idx[i] == i + d - p:
                    i -= 1
                if i < 0:
                    break
                idx[i] += 1
                for k in range(i + 1, p):
                    idx[k] = idx[k - 1] + 1
        enumerated |= pair
        remaining -= count
    left = [s for s in sizes if s not in enumerated]
    if left and remaining >= 2:
        probs = np.array([mass[s] for s in left])
        probs = probs / probs.sum()
        left_mass = sum(mass[s] for s in left)
        draws = remaining // 2
        per_draw = left_mass / (2 * draws)
        for _ in range(draws):
            s = int(rng.choice(left, p=probs))
            cols = rng.choice(d, size=s, replace=False)
            m = np.zeros(d, dtype=bool)
            m[cols] = True
            masks.append(m)
            weights.append(per_draw)
            masks.append(~m)
            weights.append(per_draw)
    return np.array(masks), np.array(weights)


def kernel_shap(
    space: ExplanationSpace,
    instance: np.ndarray,
    model_fn,
    config: ShapConfig,
) -> tuple[np.ndarray, float, bool]:
    """(attributions, base value, exact flag) for one instance.

    base + sum(attributions) equals the model prediction for the instance
    exactly, by construction.
    """
    d = space.d
    background = sample_background(space, config)
    exact = d <= config.max_exact_dim

    if exact:
        masks = _all_masks(d)
        sizes = masks.sum(axis=1)
        interior = (sizes > 0) & (sizes < d)
        v = coalition_values(space, instance, background, model_fn, masks)
        v0 = float(v[0])
        v_full = float(v[-1])
        zmat = masks[interior].astype(np.float64)
        y = v[interior]
        w = _kernel_weight(d, sizes[interior])
    else:
        rng = np.random.default_rng(config.seed + 1)
        zbool, w = _sampled_masks(d, config.num_coalitions, rng)
        ends = np.vstack([np.zeros(d, dtype=bool), np.ones(d, dtype=bool)])
        v_ends = coalition_values(space, instance, background, model_fn, ends)
        v0, v_full = float(v_ends[0]), float(v_ends[1])
        y = coalition_values(space, instance, background, model_fn, zbool)
        zmat = zbool.astype(np.float64)

    delta = v_full - v0
    if d == 1:
        return np.array([delta]), v0, exact
    # eliminate the efficiency constraint through the last feature
    ylin = y - v0 - zmat[:, -1] * delta
    A = zmat[:, :-1] - zmat[:, -1:]
    Aw = A * w[:, None]
    beta = np.linalg.lstsq(A.T @ Aw, A.T @ (w * ylin), rcond=None)[0]
    phi = np.empty(d)
    phi[:-1] = beta
    phi[-1] = delta - beta.sum()
    return phi, v0, exact
