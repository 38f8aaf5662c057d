"""CSV ingestion, schema inference, encoding, normalization, splits, and
train-time preprocessing (balance analysis, correlation warnings, PCA).

A DataTable is immutable after construction; operations that change data
(splitting, balancing, role assignment) return new tables. Numeric columns
are float64 with NaN for missing cells; categorical columns store the
category index with -1 for missing.
"""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, replace

import numpy as np

SPLITS = ("train", "validation", "test")
SPLIT_CODE = {"train": 0, "validation": 1, "test": 2}
NORMALIZATION_METHODS = ("none", "min_max", "mean_std")

_NUMERIC_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


class DataError(ValueError):
    """Malformed input data or an invalid data operation."""


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str  # 'numeric' | 'categorical'
    role: str = "ignored"  # 'input' | 'output' | 'ignored'
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("numeric", "categorical"):
            raise DataError(f"unknown feature kind {self.kind!r}")
        if self.role not in ("input", "output", "ignored"):
            raise DataError(f"unknown feature role {self.role!r}")
        if self.kind == "categorical" and len(self.categories) < 1:
            raise DataError(f"categorical feature {self.name!r} needs >= 1 category")
        if self.kind == "numeric" and self.categories:
            raise DataError(f"numeric feature {self.name!r} must not list categories")


@dataclass(frozen=True)
class DataTable:
    schema: tuple[FeatureSpec, ...]
    columns: dict[str, np.ndarray]
    split_assignment: np.ndarray  # int8 codes per row, see SPLIT_CODE
    source: str  # 'single_file_split' | 'separate_files'

    def __post_init__(self):
        names = [f.name for f in self.schema]
        if len(set(names)) != len(names):
            raise DataError("feature names must be unique within a schema")
        for arr in self.columns.values():
            arr.flags.writeable = False
        self.split_assignment.flags.writeable = False

    @property
    def n_rows(self) -> int:
        return int(self.split_assignment.shape[0])

    def feature(self, name: str) -> FeatureSpec:
        for f in self.schema:
            if f.name == name:
                return f
        raise DataError(f"unknown feature {name!r}")

    def split_mask(self, split: str) -> np.ndarray:
        if split == "all":
            return np.ones(self.n_rows, dtype=bool)
        if split not in SPLIT_CODE:
            raise DataError(f"unknown split {split!r}")
        return self.split_assignment == SPLIT_CODE[split]

    def features_with_role(self, role: str) -> list[FeatureSpec]:
        return [f for f in self.schema if f.role == role]


@dataclass(frozen=True)
class EncodedMatrix:
    column_names: tuple[str, ...]
    values: np.ndarray  # (rows, columns) float64
    group_map: dict[str, str]  # encoded column name -> source feature name

    def __post_init__(self):
        self.values.flags.writeable = False

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_columns(self) -> int:
        return int(self.values.shape[1])

    def groups(self) -> dict[str, list[int]]:
        """Column indices per originating feature, in column order."""
        out: dict[str, list[int]] = {}
        for i, name in enumerate(self.column_names):
            out.setdefault(self.group_map[name], []).append(i)
        return out

    def with_values(self, values: np.ndarray) -> "EncodedMatrix":
        return EncodedMatrix(self.column_names, values, dict(self.group_map))


@dataclass(frozen=True)
class NormalizationParams:
    method: str
    offset: np.ndarray  # per-column: min (min_max) or mean (mean_std)
    scale: np.ndarray  # per-column: max-min or std; 0 marks a constant column

    def __post_init__(self):
        if self.method not in NORMALIZATION_METHODS:
            raise DataError(f"unknown normalization method {self.method!r}")
        self.offset.flags.writeable = False
        self.scale.flags.writeable = False

    def apply(self, values: np.ndarray) -> np.ndarray:
        inv = np.where(self.scale > 0, 1.0 / np.where(self.scale > 0, self.scale, 1.0), 0.0)
        return (values - self.offset) * inv

    def invert(self, values: np.ndarray) -> np.ndarray:
        return values * self.scale + self.offset

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "offset": self.offset.tolist(),
            "scale": self.scale.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "NormalizationParams":
        return NormalizationParams(
            d["method"],
            np.asarray(d["offset"], dtype=np.float64),
            np.asarray(d["scale"], dtype=np.float64),
        )

    @staticmethod
    def identity(n_columns: int) -> "NormalizationParams":
        return NormalizationParams("none", np.zeros(n_columns), np.ones(n_columns))


# ---------------------------------------------------------------------------
# CSV loading


def _infer_column(name: str, cells: tuple[str, ...]) -> tuple[FeatureSpec, np.ndarray]:
    non_empty = [c for c in cells if c != ""]
    numeric = all(_NUMERIC_RE.match(c) for c in non_empty)
    if numeric:
        values = np.array([c if c != "" else "nan" for c in cells], dtype=np.float64)
        return FeatureSpec(name, "numeric"), values
    categories: dict[str, int] = {}
    idx = np.empty(len(cells), dtype=np.int64)
    for i, c in enumerate(cells):
        if c == "":
            idx[i] = -1
        else:
            code = categories.get(c)
            if code is None:
                code = len(categories)
                categories[c] = code
            idx[i] = code
    return FeatureSpec(name, "categorical", categories=tuple(categories)), idx


def _table_from_rows(header: list[str], rows: list, role_hint: str) -> DataTable:
    if len(set(header)) != len(header):
        raise DataError("duplicate column names in header")
    n_cols = len(header)
    for i, row in enumerate(rows):
        if len(row) != n_cols:
            raise DataError(f"ragged row {i + 2}: {len(row)} cells, expected {n_cols}")
    cols = tuple(zip(*rows)) if rows else tuple(() for _ in header)
    schema = []
    columns = {}
    for name, cells in zip(header, cols):
        spec, values = _infer_column(name, cells)
        schema.append(spec)
        columns[name] = values
    n = len(rows)
    if role_hint == "all":
        split = np.zeros(n, dtype=np.int8)
        source = "single_file_split"
    else:
        if role_hint not in SPLIT_CODE:
            raise DataError(f"unknown role hint {role_hint!r}")
        split = np.full(n, SPLIT_CODE[role_hint], dtype=np.int8)
        source = "separate_files"
    return DataTable(tuple(schema), columns, split, source)


def load_csv_text(text: str, role_hint: str = "all") -> DataTable:
    """Parse CSV text (RFC 4180, comma-separated, mandatory header row)."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty file: missing header row") from None
    rows = list(reader)
    return _table_from_rows(header, rows, role_hint)


def load_csv(path, role_hint: str = "all") -> DataTable:
    """Load a CSV file into a DataTable, inferring per-column schema.

    A column is numeric iff every non-empty cell parses as a real number
    (plain decimal or scientific notation); anything else is categorical
    with categories in order of first appearance. Empty cells are missing.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    return load_csv_text(text, role_hint)


def concat_tables(tables: list[DataTable]) -> DataTable:
    """Stack separately loaded split files into one table.

    Schemas are reconciled column-wise: a column is numeric only if numeric
    in every part; categorical categories are merged in first-appearance
    order across parts.
    """
    if not tables:
        raise DataError("nothing to concatenate")
    names = [f.name for f in tables[0].schema]
    for t in tables[1:]:
        if [f.name for f in t.schema] != names:
            raise DataError("separate files must share one header")
    schema = []
    columns = {}
    for name in names:
        specs = [t.feature(name) for t in tables]
        if all(s.kind == "numeric" for s in specs):
            schema.append(FeatureSpec(name, "numeric"))
            columns[name] = np.concatenate([t.columns[name] for t in tables])
            continue
        categories: dict[str, int] = {}
        parts = []
        for t, s in zip(tables, specs):
            col = t.columns[name]
            if s.kind == "numeric":
                labels = [_format_number(v) if np.isfinite(v) else "" for v in col]
            else:
                labels = ["" if i < 0 else s.categories[i] for i in col]
            out = np.empty(len(labels), dtype=np.int64)
            for i, lab in enumerate(labels):
                if lab == "":
                    out[i] = -1
                else:
                    code = categories.get(lab)
                    if code is None:
                        code = len(categories)
                        categories[lab] = code
                    out[i] = code
            parts.append(out)
        schema.append(FeatureSpec(name, "categorical", categories=tuple(categories)))
        columns[name] = np.concatenate(parts)
    split = np.concatenate([t.split_assignment for t in tables])
    return DataTable(tuple(schema), columns, split, "separate_files")


def _format_number(v: float) -> str:
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


# ---------------------------------------------------------------------------
# Splitting


def split_random(table: DataTable, fractions: dict[str, float], seed: int) -> DataTable:
    """Randomly partition rows into train/validation/test.

    Sizes are round(n * f_train) and round(n * f_validation), remainder to
    test. Deterministic for a given seed.
    """
    if table.source != "single_file_split":
        raise DataError("cannot re-split data loaded from separate files")
    f_tr = float(fractions.get("train", 0.0))
    f_va = float(fractions.get("validation", 0.0))
    f_te = float(fractions.get("test", 0.0))
    if min(f_tr, f_va, f_te) < 0 or abs(f_tr + f_va + f_te - 1.0) > 1e-9:
        raise DataError("split fractions must be nonnegative and sum to 1")
    n = table.n_rows
    n_tr = int(np.floor(n * f_tr + 0.5))
    n_va = min(int(np.floor(n * f_va + 0.5)), n - n_tr)
    order = np.random.default_rng(seed).permutation(n)
    split = np.empty(n, dtype=np.int8)
    split[order[:n_tr]] = SPLIT_CODE["train"]
    split[order[n_tr : n_tr + n_va]] = SPLIT_CODE["validation"]
    split[order[n_tr + n_va :]] = SPLIT_CODE["test"]
    return replace(table, split_assignment=split)


def assign_roles(table: DataTable, inputs: list[str], outputs: list[str]) -> DataTable:
    """Mark selected features as inputs/outputs; everything else is ignored."""
    if not inputs or not outputs:
        raise DataError("need at least one input and one output feature")
    overlap = set(inputs) & set(outputs)
    if overlap:
        raise DataError(f"features cannot be both input and output: {sorted(overlap)}")
    known = {f.name for f in table.schema}
    for name in list(inputs) + list(outputs):
        if name not in known:
            raise DataError(f"unknown feature {name!r}")
    schema = []
    for f in table.schema:
        role = "input" if f.name in inputs else "output" if f.name in outputs else "ignored"
        schema.append(replace(f, role=role))
    return replace(table, schema=tuple(schema))


# ---------------------------------------------------------------------------
# Encoding


@dataclass(frozen=True)
class EncodedDataset:
    inputs: EncodedMatrix
    outputs: EncodedMatrix
    split_assignment: np.ndarray  # per kept row
    kept_rows: np.ndarray  # indices into the source table
    dropped_count: int
    task: str

    def __post_init__(self):
        self.split_assignment.flags.writeable = False
        self.kept_rows.flags.writeable = False

    def split_mask(self, split: str) -> np.ndarray:
        if split == "all":
            return np.ones(len(self.split_assignment), dtype=bool)
        if split not in SPLIT_CODE:
            raise DataError(f"unknown split {split!r}")
        return self.split_assignment == SPLIT_CODE[split]


def _classification_categories(table: DataTable, spec: FeatureSpec) -> tuple[str, ...]:
    if spec.kind == "categorical":
        return spec.categories
    col = table.columns[spec.name]
    vals = np.unique(col[np.isfinite(col)])
    if vals.size < 2:
        raise DataError(f"output {spec.name!r} has fewer than 2 distinct values")
    return tuple(_format_number(v) for v in vals)


def _one_hot(codes: np.ndarray, spec: FeatureSpec) -> tuple[list[str], np.ndarray]:
    k = len(spec.categories)
    names = [f"{spec.name}={c}" for c in spec.categories]
    out = np.zeros((codes.shape[0], k), dtype=np.float64)
    out[np.arange(codes.shape[0]), codes] = 1.0
    return names, out


def encode(table: DataTable, task: str) -> EncodedDataset:
    """One-hot encode selected features into input/output matrices.

    Rows with a missing value in any selected feature are dropped first.
    Classification requires a single output feature; its values become
    one-hot target columns (numeric outputs are treated as class labels).
    Regression outputs pass through numerically.
    """
    if task not in ("regression", "classification"):
        raise DataError(f"unknown task {task!r}")
    in_specs = table.features_with_role("input")
    out_specs = table.features_with_role("output")
    if not in_specs or not out_specs:
        raise DataError("need at least one input and one output feature")
    if task == "classification" and len(out_specs) != 1:
        raise DataError("classification supports exactly one output feature")
    if task == "regression":
        for s in out_specs:
            if s.kind == "categorical":
                raise DataError(f"regression output {s.name!r} must be numeric")

    selected = in_specs + out_specs
    keep = np.ones(table.n_rows, dtype=bool)
    for s in selected:
        col = table.columns[s.name]
        keep &= np.isfinite(col) if s.kind == "numeric" else (col >= 0)
    kept_rows = np.flatnonzero(keep)
    dropped = table.n_rows - kept_rows.size
    if kept_rows.size == 0:
        raise DataError("no rows remain after dropping missing values")

    def encode_group(specs: list[FeatureSpec], classification: bool) -> EncodedMatrix:
        names: list[str] = []
        blocks: list[np.ndarray] = []
        group: dict[str, str] = {}
        for s in specs:
            col = table.columns[s.name][kept_rows]
            if classification:
                cats = _classification_categories(table, s)
                if s.kind == "numeric":
                    lut = {c: i for i, c in enumerate(cats)}
                    codes = np.array([lut[_format_number(v)] for v in col], dtype=np.int64)
                else:
                    codes = col.astype(np.int64)
                cnames, block = _one_hot(codes, replace(s, categories=cats, kind="categorical"))
            elif s.kind == "categorical":
                cnames, block = _one_hot(col.astype(np.int64), s)
            else:
                cnames, block = [s.name], col.astype(np.float64)[:, None]
            names.extend(cnames)
            blocks.append(block)
            for c in cnames:
                group[c] = s.name
        return EncodedMatrix(tuple(names), np.hstack(blocks), group)

    inputs = encode_group(in_specs, classification=False)
    outputs = encode_group(out_specs, classification=(task == "classification"))
    return EncodedDataset(
        inputs=inputs,
        outputs=outputs,
        split_assignment=table.split_assignment[kept_rows].copy(),
        kept_rows=kept_rows,
        dropped_count=dropped,
        task=task,
    )


# ---------------------------------------------------------------------------
# Normalization


def fit_normalizer(values: np.ndarray, method: str, train_mask: np.ndarray) -> NormalizationParams:
    """Fit normalization statistics on the train rows only.

    min_max maps train extremes to [0, 1]; mean_std maps the train split to
    mean 0/std 1. Constant columns map to 0 under both methods and invert
    back to the stored constant.
    """
    if method not in NORMALIZATION_METHODS:
        raise DataError(f"unknown normalization method {method!r}")
    n_cols = values.shape[1]
    if method == "none":
        return NormalizationParams.identity(n_cols)
    train = values[train_mask]
    if train.shape[0] == 0:
        raise DataError("cannot fit normalization without train rows")
    if method == "min_max":
        lo = train.min(axis=0)
        hi = train.max(axis=0)
        return NormalizationParams("min_max", lo, hi - lo)
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    return NormalizationParams("mean_std", mu, sd)


# ---------------------------------------------------------------------------
# Balance analysis


@dataclass(frozen=True)
class BalanceEntry:
    label: str
    count: int
    fraction: float


@dataclass(frozen=True)
class BalanceReport:
    entries: dict[str, tuple[BalanceEntry, ...]]  # feature -> per-category rows
    imbalance_ratio: dict[str, float]  # feature -> max count / min count


def _binned_codes(col: np.ndarray, bins: int) -> tuple[np.ndarray, list[str]]:
    finite = col[np.isfinite(col)]
    lo, hi = float(finite.min()), float(finite.max())
    edges = np.linspace(lo, hi, bins + 1)
    codes = np.clip(np.searchsorted(edges, col, side="right") - 1, 0, bins - 1)
    codes = np.where(np.isfinite(col), codes, -1)
    labels = [f"[{edges[i]:.6g}, {edges[i + 1]:.6g})" for i in range(bins)]
    labels[-1] = labels[-1][:-1] + "]"
    return codes.astype(np.int64), labels


def _label_codes(col: np.ndarray) -> tuple[np.ndarray, list[str]]:
    values = np.unique(col[np.isfinite(col)])
    lut = {v: i for i, v in enumerate(values)}
    codes = np.array([lut[v] if np.isfinite(v) else -1 for v in col], dtype=np.int64)
    return codes, [_format_number(v) for v in values]


def _category_codes(
    table: DataTable, name: str, bins: int | None, label_features=()
) -> tuple[np.ndarray, list[str]]:
    spec = table.feature(name)
    col = table.columns[name]
    if spec.kind == "categorical":
        return col.astype(np.int64), list(spec.categories)
    if name in label_features:  # numeric column used as class labels
        return _label_codes(col)
    if bins is None:
        raise DataError(f"numeric feature {name!r} requires explicit binning for balance analysis")
    return _binned_codes(col, bins)


def balance_report(
    table: DataTable, features: list[str], bins: int | None = None, label_features=()
) -> BalanceReport:
    """Category counts, fractions, and imbalance ratio per analyzed feature.

    Numeric features need an explicit bin count unless named in
    ``label_features`` (distinct values act as class labels).
    """
    entries: dict[str, tuple[BalanceEntry, ...]] = {}
    ratios: dict[str, float] = {}
    for name in features:
        codes, labels = _category_codes(table, name, bins, label_features)
        counts = np.bincount(codes[codes >= 0], minlength=len(labels))
        total = int(counts.sum())
        if total == 0:
            raise DataError(f"feature {name!r} has no observed values")
        rows = tuple(
            BalanceEntry(label, int(c), float(c) / total) for label, c in zip(labels, counts)
        )
        entries[name] = rows
        present = counts[counts > 0]
        ratios[name] = float(present.max()) / float(present.min())
    return BalanceReport(entries, ratios)


def apply_balancing(
    table: DataTable, targets: list[str], seed: int, bins: int | None = None, label_features=()
) -> DataTable:
    """Equalize category counts on the train split by random oversampling.

    Minority categories are duplicated with replacement until every observed
    category of every target feature matches the majority count. Appended
    rows are assigned to the train split.
    """
    train_rows = np.flatnonzero(table.split_mask("train"))
    extra: list[np.ndarray] = []
    rng = np.random.default_rng(seed)
    for name in targets:
        codes, _ = _category_codes(table, name, bins, label_features)
        codes = codes[train_rows]
        observed = np.unique(codes[codes >= 0])
        if observed.size == 0:
            raise DataError(f"feature {name!r} has no observed train values")
        counts = {int(c): int(np.sum(codes == c)) for c in observed}
        top = max(counts.values())
        for c, cnt in counts.items():
            if cnt < top:
                pool = train_rows[codes == c]
                extra.append(rng.choice(pool, size=top - cnt, replace=True))
    if not extra:
        return table
    new_rows = np.concatenate(extra)
    columns = {
        name: np.concatenate([col, col[new_rows]]) for name, col in table.columns.items()
    }
    split = np.concatenate(
        [table.split_assignment, np.full(new_rows.size, SPLIT_CODE["train"], dtype=np.int8)]
    )
    return DataTable(table.schema, columns, split, table.source)


# ---------------------------------------------------------------------------
# Correlation warnings and PCA


@dataclass(frozen=True)
class CorrelationReport:
    pairs: tuple[tuple[str, str, float], ...]  # (column, column, pearson r)
    zero_variance: tuple[str, ...]

    def warnings(self) -> list[str]:
        out = [
            f"inputs '{a}' and '{b}' are strongly correlated (r={r:.3f}); "
            "sensitivity may be split between them"
            for a, b, r in self.pairs
        ]
        if self.zero_variance:
            out.append("zero-variance input columns skipped: " + ", ".join(self.zero_variance))
        return out


def correlation_check(matrix: EncodedMatrix, threshold: float = 0.9) -> CorrelationReport:
    """All column pairs with |Pearson r| >= threshold.

    Zero-variance columns cannot carry a correlation and are reported
    separately. The warning is advisory and never blocks.
    """
    values = matrix.values
    if values.shape[0] < 2:
        raise DataError("correlation check needs at least 2 rows")
    sd = values.std(axis=0)
    live = sd > 0
    zero_var = tuple(n for n, ok in zip(matrix.column_names, live) if not ok)
    idx = np.flatnonzero(live)
    pairs: list[tuple[str, str, float]] = []
    if idx.size >= 2:
        r = np.corrcoef(values[:, idx], rowvar=False)
        for a in range(idx.size):
            for b in range(a + 1, idx.size):
                if abs(r[a, b]) >= threshold:
                    pairs.append(
                        (matrix.column_names[idx[a]], matrix.column_names[idx[b]], float(r[a, b]))
                    )
    return CorrelationReport(tuple(pairs), zero_var)


@dataclass(frozen=True)
class PcaTransform:
    means: np.ndarray  # train-split column means
    components: np.ndarray  # (kept, d) principal axes, rows orthonormal
    explained_variance: np.ndarray  # per kept component
    explained_ratio: np.ndarray
    source_columns: tuple[str, ...]

    def __post_init__(self):
        for arr in (self.means, self.components, self.explained_variance, self.explained_ratio):
            arr.flags.writeable = False

    @property
    def n_components(self) -> int:
        return int(self.components.shape[0])

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(f"pc_{i}" for i in range(self.n_components))

    def transform(self, matrix: EncodedMatrix) -> EncodedMatrix:
        if matrix.column_names != self.source_columns:
            raise DataError("PCA transform fitted on different columns")
        scores = (matrix.values - self.means) @ self.components.T
        names = self.column_names
        return EncodedMatrix(names, scores, {n: n for n in names})

    def inverse(self, scores: np.ndarray) -> np.ndarray:
        return scores @ self.components + self.means

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "explained_ratio": self.explained_ratio.tolist(),
            "source_columns": list(self.source_columns),
        }

    @staticmethod
    def from_dict(d: dict) -> "PcaTransform":
        return PcaTransform(
            np.asarray(d["means"], dtype=np.float64),
            np.asarray(d["components"], dtype=np.float64),
            np.asarray(d["explained_variance"], dtype=np.float64),
            np.asarray(d["explained_ratio"], dtype=np.float64),
            tuple(d["source_columns"]),
        )


def fit_pca(
    matrix: EncodedMatrix, train_mask: np.ndarray, variance_kept: float = 0.99
) -> PcaTransform:
    """Fit a PCA on the centered train rows.

    Keeps the smallest component count whose cumulative explained variance
    reaches ``variance_kept``. Use 1.0 to keep every component with nonzero
    variance (full-rank reconstruction).
    """
    train = matrix.values[train_mask]
    if train.shape[0] < 2:
        raise DataError("PCA needs at least 2 train rows")
    means = train.mean(axis=0)
    centered = train - means
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    var = s * s / (train.shape[0] - 1)
    total = var.sum()
    if total <= 0:
        raise DataError("PCA on zero-variance data")
    ratio = var / total
    cum = np.cumsum(ratio)
    kept = int(np.searchsorted(cum, variance_kept - 1e-12) + 1)
    kept = min(kept, int(np.sum(var > total * 1e-15)) or 1)
    return PcaTransform(
        means=means,
        components=vt[:kept].copy(),
        explained_variance=var[:kept].copy(),
        explained_ratio=ratio[:kept].copy(),
        source_columns=matrix.column_names,
    )
