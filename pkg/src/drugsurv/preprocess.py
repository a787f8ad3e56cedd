"""Record-to-matrix encoding: typing, one-hot levels, missing indicators,
fold-local standardization and PCA-based feature screening.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cohort import BIOLOGICS, OUTCOME_INDEX, SEXES, PatientRecord
from .errors import DegenerateCovariance, EmptyCohort, SchemaMismatch

MODES = ("baseline", "retrospective")

# (source feature, encoding, levels, optional) in registry column order.
# Booleans are encoded as numeric 0/1 so they share the standardization
# path; categoricals expand to one column per declared level.
_SOURCE_FEATURES = (
    ("age_years", "numeric", None, False),
    ("sex", "categorical", SEXES, False),
    ("height_cm", "numeric", None, True),
    ("weight_kg", "numeric", None, True),
    ("comorbidity_count", "numeric", None, True),
    ("age_at_diagnosis", "numeric", None, True),
    ("psa_diagnosis", "boolean", None, False),
    ("previous_mtx", "boolean", None, False),
    ("concurrent_mtx", "boolean", None, True),
    ("previous_biologic", "boolean", None, False),
    ("baseline_dlqi", "numeric", None, True),
    ("baseline_pasi", "numeric", None, True),
    ("biologic", "categorical", BIOLOGICS, False),
    ("repeat_series", "boolean", None, False),
    ("treatment_length_months", "numeric", None, False),
)


@dataclass(frozen=True)
class SchemaColumn:
    """One encoded column: identity plus standardization statistics.

    ``kind`` is one of numeric, onehot, indicator. Only numeric columns are
    standardized; mean/sd describe the observed training values, with sd
    forced to 1 (and ``constant`` set) when variance degenerates.
    """

    name: str
    source: str
    kind: str
    mean: float = 0.0
    sd: float = 1.0
    constant: bool = False


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered encoded columns with fold-local statistics.

    Baseline mode excludes treatment_length_months as a predictor;
    retrospective mode appends it as the final numeric column.
    """

    mode: str
    columns: tuple[SchemaColumn, ...]

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    @property
    def fingerprint(self) -> str:
        """Hex digest of the ordered (name, source, kind) column list.

        Statistics are excluded on purpose: schemas from different training
        folds stay interchangeable as long as the column structure matches.
        """
        h = hashlib.sha256()
        h.update(self.mode.encode())
        for c in self.columns:
            h.update(f"|{c.name}|{c.source}|{c.kind}".encode())
        return h.hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "columns": [
                {"name": c.name, "source": c.source, "kind": c.kind,
                 "mean": c.mean, "sd": c.sd, "constant": c.constant}
                for c in self.columns
            ],
        }

    @staticmethod
    def from_dict(data: dict) -> "FeatureSchema":
        try:
            columns = tuple(
                SchemaColumn(name=c["name"], source=c["source"], kind=c["kind"],
                             mean=float(c["mean"]), sd=float(c["sd"]),
                             constant=bool(c["constant"]))
                for c in data["columns"]
            )
            return FeatureSchema(mode=data["mode"], columns=columns)
        except (KeyError, TypeError) as err:
            raise SchemaMismatch(f"malformed schema payload: {err}") from None


@dataclass(frozen=True)
class FeatureMatrix:
    """Encoded rows with aligned label/length vectors and their schema."""

    X: np.ndarray
    labels: np.ndarray | None
    lengths: np.ndarray
    schema: FeatureSchema

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[1] != self.schema.n_columns:
            raise SchemaMismatch(
                f"matrix has {self.X.shape} columns, schema expects {self.schema.n_columns}")
        if self.labels is not None and len(self.labels) != len(self.X):
            raise SchemaMismatch("label vector length differs from row count")


def _source_plan(mode: str):
    if mode not in MODES:
        raise SchemaMismatch(f"unknown schema mode {mode!r}, expected one of {MODES}")
    for feat in _SOURCE_FEATURES:
        if feat[0] == "treatment_length_months" and mode == "baseline":
            continue
        yield feat


def _observed(records: Sequence[PatientRecord], source: str) -> list[float]:
    values = []
    for rec in records:
        v = getattr(rec, source)
        if v is not None:
            values.append(float(v))
    return values


def derive_schema(records: Sequence[PatientRecord], mode: str = "baseline") -> FeatureSchema:
    """Build the encoding schema from a training subset only.

    Numeric statistics come from observed values (missing cells excluded);
    sample SD uses the n-1 denominator. Columns with fewer than two
    observed values or zero variance are flagged constant with SD 1.
    """
    if not records:
        raise EmptyCohort("derive_schema needs a non-empty training subset")
    columns: list[SchemaColumn] = []
    for source, encoding, levels, optional in _source_plan(mode):
        if encoding == "categorical":
            for level in levels:
                share = sum(1 for rec in records if getattr(rec, source) == level) \
                    / len(records)
                # Share recorded for profile-mode lookups; one-hot encoding
                # itself never standardizes.
                columns.append(SchemaColumn(
                    name=f"{source}={level}", source=source, kind="onehot",
                    mean=float(share)))
        else:
            values = _observed(records, source)
            if len(values) >= 2:
                arr = np.asarray(values)
                mean = float(arr.mean())
                sd = float(arr.std(ddof=1))
            elif len(values) == 1:
                mean, sd = float(values[0]), 0.0
            else:
                mean, sd = 0.0, 0.0
            constant = sd <= 0.0
            columns.append(SchemaColumn(
                name=source, source=source, kind="numeric",
                mean=mean, sd=1.0 if constant else sd, constant=constant))
        if optional:
            columns.append(SchemaColumn(
                name=f"{source}__missing", source=source, kind="indicator"))
    return FeatureSchema(mode=mode, columns=tuple(columns))


def encode(records: Sequence[PatientRecord], schema: FeatureSchema) -> FeatureMatrix:
    """Encode records under a previously derived schema.

    Missing numerics impute to the training mean (standardized 0) with the
    paired indicator set; unknown categorical levels encode as an all-zero
    one-hot block with a warning. The schema is never mutated, so encoding
    held-out rows cannot leak their statistics.
    """
    n = len(records)
    X = np.zeros((n, schema.n_columns), dtype=float)
    levels_by_source: dict[str, set[str]] = {}
    for col in schema.columns:
        if col.kind == "onehot":
            levels_by_source.setdefault(col.source, set()).add(col.name.split("=", 1)[1])

    for j, col in enumerate(schema.columns):
        if col.kind == "onehot":
            level = col.name.split("=", 1)[1]
            for i, rec in enumerate(records):
                if getattr(rec, col.source) == level:
                    X[i, j] = 1.0
        elif col.kind == "indicator":
            for i, rec in enumerate(records):
                if getattr(rec, col.source) is None:
                    X[i, j] = 1.0
        else:
            for i, rec in enumerate(records):
                v = getattr(rec, col.source)
                if v is None:
                    X[i, j] = 0.0
                else:
                    X[i, j] = (float(v) - col.mean) / col.sd

    for source, levels in levels_by_source.items():
        for rec in records:
            v = getattr(rec, source)
            if v is not None and v not in levels:
                warnings.warn(
                    f"unknown {source} level {v!r}; encoded as all-zero one-hot",
                    stacklevel=2)

    labels = None
    if records and all(rec.outcome is not None for rec in records):
        labels = np.array([OUTCOME_INDEX[rec.outcome] for rec in records], dtype=int)
    lengths = np.array([rec.treatment_length_months for rec in records], dtype=float)
    return FeatureMatrix(X=X, labels=labels, lengths=lengths, schema=schema)


# ---------------------------------------------------------------------------
# PCA feature screening
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PcaScreenReport:
    """Eigen-structure of the feature covariance plus screening verdicts."""

    eigenvalues: np.ndarray
    explained_ratios: np.ndarray
    n_retained: int
    feature_names: tuple[str, ...]
    max_abs_loading: np.ndarray
    dropped_features: tuple[str, ...]

    def to_csv(self) -> str:
        lines = ["component,eigenvalue,ratio,cumulative_ratio"]
        cumulative = 0.0
        for i, (val, ratio) in enumerate(zip(self.eigenvalues, self.explained_ratios)):
            cumulative += float(ratio)
            lines.append(f"{i},{float(val):.12g},{float(ratio):.12g},{cumulative:.12g}")
        return "\n".join(lines) + "\n"


def pca_screen(matrix: FeatureMatrix | np.ndarray,
               variance_threshold: float = 0.95,
               loading_floor: float = 0.1) -> PcaScreenReport:
    """Screen features by their loadings on the retained principal components.

    Components are retained up to the requested cumulative explained
    variance; a feature is dropped when its largest absolute loading over
    the retained components falls below the floor.
    """
    if isinstance(matrix, FeatureMatrix):
        X = matrix.X
        names = matrix.schema.column_names
    else:
        X = np.asarray(matrix, dtype=float)
        names = tuple(f"x{j}" for j in range(X.shape[1]))
    if X.ndim != 2 or X.shape[0] <= 1:
        raise DegenerateCovariance("covariance needs at least two rows")

    centered = X - X.mean(axis=0, keepdims=True)
    cov = centered.T @ centered / (X.shape[0] - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = np.clip(eigenvalues[order], 0.0, None)
    eigenvectors = eigenvectors[:, order]
    total = float(eigenvalues.sum())
    if total <= 0.0:
        raise DegenerateCovariance("all features are constant, covariance is zero")
    ratios = eigenvalues / total

    cumulative = np.cumsum(ratios)
    n_retained = int(np.searchsorted(cumulative, variance_threshold - 1e-12) + 1)
    n_retained = min(n_retained, len(eigenvalues))
    retained = eigenvectors[:, :n_retained]
    max_abs = np.abs(retained).max(axis=1)
    dropped = tuple(name for name, m in zip(names, max_abs) if m < loading_floor)
    return PcaScreenReport(
        eigenvalues=eigenvalues,
        explained_ratios=ratios,
        n_retained=n_retained,
        feature_names=names,
        max_abs_loading=max_abs,
        dropped_features=dropped,
    )
