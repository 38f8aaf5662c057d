"""Variance-based global sensitivity analysis via the extended FAST method.

Each input column is driven along a periodic search curve: the column of
interest at a high frequency, the remaining columns at low interfering
frequencies, all with random phases. Fourier amplitudes of the model
output at harmonics of the high frequency give the first-order effect;
the low-frequency band gives the complementary-set variance and with it
the total-order index. Estimates are averaged over independent phase
resamples.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import EncodedDataset, EncodedMatrix, correlation_check
from .models import TrainedModel


class GsaError(ValueError):
    pass


@dataclass(frozen=True)
class EfastConfig:
    samples_per_curve: int = 65  # odd, >= 4*M^2 + 1
    interference_factor: int = 4
    resamples: int = 10
    seed: int = 0

    def __post_init__(self):
        m = self.interference_factor
        n = self.samples_per_curve
        if m < 1:
            raise GsaError("interference factor must be >= 1")
        if n < 4 * m * m + 1:
            raise GsaError(
                f"samples_per_curve must be >= 4*M^2+1 = {4 * m * m + 1}, got {n}"
            )
        if n % 2 == 0:
            raise GsaError("samples_per_curve must be odd")
        if self.resamples < 1:
            raise GsaError("resamples must be >= 1")

    @property
    def omega_hi(self) -> int:
        return (self.samples_per_curve - 1) // (2 * self.interference_factor)

    @property
    def complementary_max(self) -> int:
        return max(1, self.omega_hi // (2 * self.interference_factor))


@dataclass(frozen=True)
class EfastCurve:
    foi: int  # feature-of-interest index among live (non-degenerate) inputs
    resample: int
    frequencies: np.ndarray  # per live input
    unit_points: np.ndarray  # (N, d_live) in [0, 1]


@dataclass(frozen=True)
class SobolEntry:
    input_name: str
    s1: float
    st: float


@dataclass(frozen=True)
class SobolResult:
    outputs: dict[str, tuple[SobolEntry, ...]]  # output column -> per-input indices
    total_variance: dict[str, float]
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "outputs": {
                name: [
                    {"input": e.input_name, "s1": e.s1, "st": e.st} for e in entries
                ]
                for name, entries in self.outputs.items()
            },
            "total_variance": dict(self.total_variance),
            "warnings": list(self.warnings),
        }

    def to_csv(self) -> str:
        lines = ["input,output,s1,st"]
        for output, entries in self.outputs.items():
            for e in entries:
                lines.append(f"{e.input_name},{output},{e.s1:.12g},{e.st:.12g}")
        return "\n".join(lines) + "\n"


def efast_design(config: EfastConfig, d: int) -> list[EfastCurve]:
    """Search-curve sample matrices, one curve per (resample, input).

    Coordinates are 0.5 + arcsin(sin(omega*s + phase))/pi over the N sample
    points s_k = 2*pi*k/N, which sweeps [0, 1]. Deterministic for a seed.
    """
    if d == 0:
        raise GsaError("need at least one input")
    n = config.samples_per_curve
    s = 2.0 * np.pi * np.arange(n) / n
    rng = np.random.default_rng(config.seed)
    curves: list[EfastCurve] = []
    comp_values = np.arange(1, config.complementary_max + 1)
    for resample in range(config.resamples):
        for i in range(d):
            freqs = np.empty(d, dtype=np.int64)
            freqs[i] = config.omega_hi
            others = [j for j in range(d) if j != i]
            for pos, j in enumerate(others):
                freqs[j] = comp_values[pos % comp_values.size]
            phases = rng.uniform(0.0, 2.0 * np.pi, size=d)
            angles = freqs[None, :] * s[:, None] + phases[None, :]
            unit = 0.5 + np.arcsin(np.sin(angles)) / np.pi
            curves.append(EfastCurve(i, resample, freqs, unit))
    return curves


def fourier_variances(y: np.ndarray, omega_hi: int, interference_factor: int):
    """(first-order variance, complementary variance, total variance) of one
    output curve, from its Fourier amplitudes."""
    n = y.shape[0]
    k = np.arange(1, (n - 1) // 2 + 1)
    s = 2.0 * np.pi * np.arange(n) / n
    arg = np.outer(k, s)
    a = (2.0 / n) * (np.cos(arg) @ y)
    b = (2.0 / n) * (np.sin(arg) @ y)
    lam = a * a + b * b  # spectrum; any common scaling cancels in the ratios
    total = lam.sum() / 2.0
    harmonics = np.arange(1, interference_factor + 1) * omega_hi
    first = lam[harmonics - 1].sum() / 2.0
    cutoff = omega_hi // 2
    complementary = lam[:cutoff].sum() / 2.0
    return first, complementary, total


def efast_indices(
    curve_outputs: list[tuple[EfastCurve, np.ndarray]],
    config: EfastConfig,
    d: int,
) -> tuple[np.ndarray, np.ndarray, float, bool]:
    """Average S1/ST per input over resamples for one model output.

    Returns (s1, st, mean total variance, constant_output flag); a constant
    output yields all-zero indices and the flag set.
    """
    n = config.samples_per_curve
    s1 = np.zeros((config.resamples, d))
    st = np.zeros((config.resamples, d))
    variances = []
    degenerate = True
    for curve, y in curve_outputs:
        if y.shape[0] != n:
            raise GsaError("each curve must produce exactly N output values")
        first, comp, total = fourier_variances(y, config.omega_hi, config.interference_factor)
        variances.append(total)
        scale = max(1.0, float(np.abs(y).max()))
        if total <= (1e-10 * scale) ** 2:  # constant output up to float dust
            continue
        degenerate = False
        s1[curve.resample, curve.foi] = first / total
        st[curve.resample, curve.foi] = 1.0 - comp / total
    return (
        s1.mean(axis=0),
        st.mean(axis=0),
        float(np.mean(variances)) if variances else 0.0,
        degenerate,
    )


def run_gsa(
    model: TrainedModel,
    dataset: EncodedDataset,
    split: str,
    config: EfastConfig | None = None,
    correlation_threshold: float = 0.9,
) -> SobolResult:
    """eFAST Sobol indices of a trained model over one split's input ranges.

    Bounds are the per-encoded-column (min, max) of the chosen split, so
    one-hot columns are driven as independent [0, 1] inputs. Degenerate
    (constant) columns are excluded and reported with zero indices.
    Correlated inputs trigger advisory warnings because the sensitivity
    response is split between them.
    """
    config = config or EfastConfig()
    mask = dataset.split_mask(split)
    if not mask.any():
        raise GsaError(f"split {split!r} is empty")
    X = dataset.inputs.values[mask]
    if dataset.inputs.column_names != model.fingerprint.input_columns:
        raise GsaError("dataset encoding does not match the model fingerprint")
    names = list(dataset.inputs.column_names)
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    live = np.flatnonzero(hi > lo)
    warnings: list[str] = []
    corr = correlation_check(
        EncodedMatrix(tuple(names), X, dict(dataset.inputs.group_map)),
        threshold=correlation_threshold,
    )
    warnings.extend(corr.warnings())
    if live.size == 0:
        raise GsaError("all input columns are constant on this split")

    curves = efast_design(config, int(live.size))
    n = config.samples_per_curve
    # one batched prediction over all curves
    stacked = np.empty((len(curves) * n, X.shape[1]), dtype=np.float64)
    for c, curve in enumerate(curves):
        block = np.tile(lo, (n, 1))
        block[:, live] = lo[live] + curve.unit_points * (hi[live] - lo[live])
        stacked[c * n : (c + 1) * n] = block
    predictions = model.predict_values(stacked)

    out_names = list(dataset.outputs.column_names)
    outputs: dict[str, tuple[SobolEntry, ...]] = {}
    variances: dict[str, float] = {}
    constant_outputs: list[str] = []
    for o, out_name in enumerate(out_names):
        per_curve = [
            (curve, predictions[c * n : (c + 1) * n, o]) for c, curve in enumerate(curves)
        ]
        s1, st, total_var, degenerate = efast_indices(per_curve, config, int(live.size))
        if degenerate:
            constant_outputs.append(out_name)
        entries = []
        pos = 0
        for j, name in enumerate(names):
            if j in live:
                entries.append(SobolEntry(name, float(s1[pos]), float(st[pos])))
                pos += 1
            else:
                entries.append(SobolEntry(name, 0.0, 0.0))
        outputs[out_name] = tuple(entries)
        variances[out_name] = total_var
    degenerate_cols = [names[j] for j in range(len(names)) if j not in set(live.tolist())]
    if degenerate_cols:
        warnings.append(
            "constant input columns excluded from the analysis: " + ", ".join(degenerate_cols)
        )
    if constant_outputs:
        warnings.append(
            "model output is constant over the sampled space; indices reported as 0 for: "
            + ", ".join(constant_outputs)
        )
    return SobolResult(outputs, variances, tuple(warnings))
