"""Measurement surface: k-fold cross-validation, confusion matrices,
one-vs-rest ROC/AUC, regression agreement metrics and SVG plot export.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cohort import (
    N_CLASSES,
    OUTCOME_INDEX,
    PatientRecord,
    ROC_GROUP_POSITIVES,
    RocGroup,
)
from .errors import (
    DegenerateLabels,
    EmptyInput,
    LengthMismatch,
    OneClassOnly,
    TooFewRows,
    ZeroVariance,
)
from .learn import CLASS_NAMES, ModelArtifact, ModelConfig, fit_model, predict
from .preprocess import derive_schema, encode


# ---------------------------------------------------------------------------
# Confusion matrix and accuracy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix:
    """6x6 counts indexed [predicted class][true class]."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=int)
        if counts.shape != (N_CLASSES, N_CLASSES):
            raise LengthMismatch(f"confusion matrix must be 6x6, got {counts.shape}")
        if (counts < 0).any():
            raise LengthMismatch("confusion counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def micro_accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total

    def class_accuracy(self, k: int) -> float:
        """Binary (TP+TN)/total after collapsing one-vs-rest on class k."""
        tp = self.counts[k, k]
        fp = self.counts[k, :].sum() - tp
        fn = self.counts[:, k].sum() - tp
        tn = self.total - tp - fp - fn
        return float(tp + tn) / self.total

    def to_csv(self) -> str:
        lines = ["predicted\\true," + ",".join(CLASS_NAMES)]
        for k, name in enumerate(CLASS_NAMES):
            lines.append(name + "," + ",".join(str(int(c)) for c in self.counts[k]))
        return "\n".join(lines) + "\n"


def confusion_and_accuracy(true_labels: Sequence[int],
                           predicted_labels: Sequence[int],
                           ) -> tuple[ConfusionMatrix, float]:
    """Pool labels into the 6x6 matrix; accuracy is its trace over total."""
    t = np.asarray(true_labels, dtype=int)
    p = np.asarray(predicted_labels, dtype=int)
    if len(t) != len(p):
        raise LengthMismatch(f"got {len(t)} true labels but {len(p)} predictions")
    if len(t) == 0:
        raise EmptyInput("accuracy needs at least one labeled row")
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=int)
    np.add.at(counts, (p, t), 1)
    matrix = ConfusionMatrix(counts)
    return matrix, matrix.micro_accuracy


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------

def kfold_split(n: int, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Seeded shuffle then round-robin deal into k disjoint index sets."""
    if k < 1:
        raise TooFewRows(f"k must be >= 1, got {k}")
    if n < k:
        raise TooFewRows(f"cannot split {n} rows into {k} folds")
    order = np.random.default_rng(seed).permutation(n)
    return [np.sort(order[i::k]) for i in range(k)]


@dataclass(frozen=True)
class CvReport:
    """Per-fold and pooled accuracy in the comparison-table shape."""

    kind: str
    fold_accuracies: tuple[float, ...]
    confusion: ConfusionMatrix
    seconds: float
    pooled_labels: np.ndarray = field(default=None, repr=False)
    pooled_probabilities: np.ndarray = field(default=None, repr=False)
    artifacts: tuple[ModelArtifact, ...] = field(default_factory=tuple, repr=False)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def sd_accuracy(self) -> float:
        if len(self.fold_accuracies) < 2:
            return 0.0
        return float(np.std(self.fold_accuracies, ddof=1))

    @property
    def micro_accuracy(self) -> float:
        return self.confusion.micro_accuracy

    def to_csv(self) -> str:
        header = "model,accuracy,standard_deviation,runtime_s"
        row = f"{self.kind},{self.mean_accuracy!r},{self.sd_accuracy!r},{self.seconds:.3f}"
        return header + "\n" + row + "\n"


def cross_validate(records: Sequence[PatientRecord], config: ModelConfig,
                   mode: str = "retrospective", k: int = 5, seed: int = 0,
                   collect_artifacts: bool = False) -> CvReport:
    """k-fold cross-validation with fold-local schema derivation.

    Each fold's schema and model see only that fold's training rows, so
    held-out rows cannot leak statistics into the fit. Reported seconds sum
    the fit and predict wall-clock across folds.
    """
    n = len(records)
    if any(rec.outcome is None for rec in records):
        raise DegenerateLabels("cross-validation needs an outcome on every record")
    folds = kfold_split(n, k, seed)
    fold_accuracies: list[float] = []
    artifacts: list[ModelArtifact] = []
    pooled_labels: list[np.ndarray] = []
    pooled_probs: list[np.ndarray] = []
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=int)
    seconds = 0.0
    for i, test_idx in enumerate(folds):
        test_set = set(int(j) for j in test_idx)
        train_records = [records[j] for j in range(n) if j not in test_set]
        test_records = [records[j] for j in test_idx]
        try:
            schema = derive_schema(train_records, mode)
            train = encode(train_records, schema)
            test = encode(test_records, schema)
            t0 = time.perf_counter()
            artifact = fit_model(train, config)
            prediction = predict(artifact, test)
            seconds += time.perf_counter() - t0
        except Exception as err:
            raise type(err)(f"fold {i}: {err}") from err
        fold_accuracies.append(float(np.mean(prediction.class_indices == test.labels)))
        np.add.at(counts, (prediction.class_indices, test.labels), 1)
        pooled_labels.append(test.labels)
        pooled_probs.append(prediction.probabilities)
        if collect_artifacts:
            artifacts.append(artifact)
    return CvReport(
        kind=config.kind,
        fold_accuracies=tuple(fold_accuracies),
        confusion=ConfusionMatrix(counts),
        seconds=seconds,
        pooled_labels=np.concatenate(pooled_labels),
        pooled_probabilities=np.vstack(pooled_probs),
        artifacts=tuple(artifacts),
    )


def cross_validate_length(records: Sequence[PatientRecord],
                          config: ModelConfig | None = None,
                          mode: str = "baseline", k: int = 5, seed: int = 0,
                          ) -> tuple["AgreementReport", float]:
    """k-fold CV of the length regressor, pooling held-out predictions.

    Returns the Bland-Altman agreement report over the pooled held-out
    pairs plus summed fit+predict seconds. Baseline mode by default: the
    target must stay out of the design matrix.
    """
    from .errors import InvalidConfig

    if config is None:
        config = ModelConfig(kind="length_glm")
    if config.kind != "length_glm":
        raise InvalidConfig(f"length CV needs kind length_glm, got {config.kind!r}")
    n = len(records)
    folds = kfold_split(n, k, seed)
    actual: list[np.ndarray] = []
    predicted: list[np.ndarray] = []
    seconds = 0.0
    for i, test_idx in enumerate(folds):
        test_set = set(int(j) for j in test_idx)
        train_records = [records[j] for j in range(n) if j not in test_set]
        test_records = [records[j] for j in test_idx]
        try:
            schema = derive_schema(train_records, mode)
            train = encode(train_records, schema)
            test = encode(test_records, schema)
            t0 = time.perf_counter()
            artifact = fit_model(train, config)
            months = predict(artifact, test)
            seconds += time.perf_counter() - t0
        except Exception as err:
            raise type(err)(f"fold {i}: {err}") from err
        actual.append(test.lengths)
        predicted.append(months)
    report = bland_altman(np.concatenate(actual), np.concatenate(predicted))
    return report, seconds


# ---------------------------------------------------------------------------
# ROC / AUC
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RocCurve:
    """One-vs-rest ROC staircase and its trapezoid AUC."""

    group: RocGroup
    points: np.ndarray  # (m, 2) of (fpr, tpr), from (0,0) to (1,1)
    auc: float


def roc_auc_ovr(true_labels: Sequence[int], scores: np.ndarray,
                group: RocGroup) -> RocCurve:
    """ROC for one grouping: positives are the group's labels, score is the
    summed probability of those labels, thresholds sweep unique scores with
    ties collapsed onto single points (trapezoids then equal the
    Mann-Whitney pair count with half credit for ties).
    """
    y = np.asarray(true_labels, dtype=int)
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2 or scores.shape[1] != N_CLASSES:
        raise LengthMismatch(f"score matrix must be (n, {N_CLASSES}), got {scores.shape}")
    if len(y) != scores.shape[0]:
        raise LengthMismatch(f"got {len(y)} labels but {scores.shape[0]} score rows")
    positive_idx = [OUTCOME_INDEX[label] for label in ROC_GROUP_POSITIVES[group]]
    is_positive = np.isin(y, positive_idx)
    n_pos = int(is_positive.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise OneClassOnly(
            f"ROC for {group.value} needs both positives and negatives, "
            f"got {n_pos} positives of {len(y)}")
    s = scores[:, positive_idx].sum(axis=1)

    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    pos_sorted = is_positive[order].astype(float)
    boundaries = np.flatnonzero(s_sorted[:-1] > s_sorted[1:])
    cut = np.concatenate([boundaries, [len(s_sorted) - 1]])
    tp = np.cumsum(pos_sorted)[cut]
    fp = (cut + 1) - tp
    tpr = np.concatenate([[0.0], tp / n_pos])
    fpr = np.concatenate([[0.0], fp / n_neg])
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(group=group, points=np.column_stack([fpr, tpr]), auc=auc)


def roc_curves(true_labels: Sequence[int], scores: np.ndarray) -> list[RocCurve]:
    """All four one-vs-rest groupings in declared order."""
    return [roc_auc_ovr(true_labels, scores, group) for group in RocGroup]


def auc_table_csv(curves: Sequence[RocCurve]) -> str:
    lines = ["group,auc"]
    for curve in curves:
        lines.append(f"{curve.group.value},{curve.auc!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Regression agreement
# ---------------------------------------------------------------------------

def regression_metrics(actual: Sequence[float], predicted: Sequence[float],
                       ) -> tuple[float, float]:
    """(MAE, Pearson r) between observed and predicted lengths."""
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if len(a) != len(p):
        raise LengthMismatch(f"got {len(a)} actual but {len(p)} predicted values")
    if len(a) < 2:
        raise TooFewRows("regression metrics need at least two pairs")
    mae = float(np.mean(np.abs(a - p)))
    sa = float(np.std(a, ddof=1))
    sp = float(np.std(p, ddof=1))
    if sa == 0.0 or sp == 0.0:
        raise ZeroVariance("Pearson r is undefined when either vector is constant")
    cov = float(((a - a.mean()) * (p - p.mean())).sum() / (len(a) - 1))
    return mae, cov / (sa * sp)


@dataclass(frozen=True)
class AgreementReport:
    """Bland-Altman pairs and summary: bias, limits of agreement, MAE, r.

    ``pearson_r`` is None when either vector is constant (undefined).
    """

    means: np.ndarray
    differences: np.ndarray  # actual - predicted
    bias: float
    sd_differences: float
    lower_limit: float
    upper_limit: float
    mae: float
    pearson_r: float | None

    def to_csv(self) -> str:
        lines = [
            "statistic,value",
            f"bias,{self.bias!r}",
            f"sd_differences,{self.sd_differences!r}",
            f"lower_limit,{self.lower_limit!r}",
            f"upper_limit,{self.upper_limit!r}",
            f"mae,{self.mae!r}",
            f"pearson_r,{'' if self.pearson_r is None else repr(self.pearson_r)}",
        ]
        return "\n".join(lines) + "\n"


def bland_altman(actual: Sequence[float], predicted: Sequence[float]) -> AgreementReport:
    """Agreement analysis of actual vs predicted months.

    Differences are actual minus predicted; limits of agreement are
    bias +/- 1.96 sample SD of the differences.
    """
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if len(a) != len(p):
        raise LengthMismatch(f"got {len(a)} actual but {len(p)} predicted values")
    if len(a) < 2:
        raise EmptyInput("agreement analysis needs at least two pairs")
    diffs = a - p
    bias = float(diffs.mean())
    sd = float(np.std(diffs, ddof=1))
    mae = float(np.mean(np.abs(diffs)))
    try:
        _, r = regression_metrics(a, p)
    except ZeroVariance:
        r = None
    return AgreementReport(
        means=(a + p) / 2.0,
        differences=diffs,
        bias=bias,
        sd_differences=sd,
        lower_limit=bias - 1.96 * sd,
        upper_limit=bias + 1.96 * sd,
        mae=mae,
        pearson_r=r,
    )


# ---------------------------------------------------------------------------
# SVG export
# ---------------------------------------------------------------------------

_SVG_SIZE = 480
_SVG_MARGIN = 56
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _svg_open(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_SIZE}" '
        f'height="{_SVG_SIZE}" viewBox="0 0 {_SVG_SIZE} {_SVG_SIZE}">',
        f'<rect width="{_SVG_SIZE}" height="{_SVG_SIZE}" fill="white"/>',
        f'<text x="{_SVG_SIZE / 2:.1f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]


def _axis_frame(x_label: str, y_label: str) -> list[str]:
    lo, hi = _SVG_MARGIN, _SVG_SIZE - _SVG_MARGIN
    return [
        f'<line x1="{lo}" y1="{hi}" x2="{hi}" y2="{hi}" stroke="black"/>',
        f'<line x1="{lo}" y1="{lo}" x2="{lo}" y2="{hi}" stroke="black"/>',
        f'<text x="{(lo + hi) / 2:.1f}" y="{_SVG_SIZE - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>',
        f'<text x="16" y="{(lo + hi) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(lo + hi) / 2:.1f})">{y_label}</text>',
    ]


def _scale(v: float, lo: float, hi: float, flip: bool = False) -> float:
    span = _SVG_SIZE - 2 * _SVG_MARGIN
    t = (v - lo) / (hi - lo) if hi > lo else 0.5
    return _SVG_MARGIN + span * (1.0 - t if flip else t)


def roc_svg(curves: Sequence[RocCurve]) -> str:
    """Deterministic SVG of the four OvR ROC staircases with an AUC legend."""
    parts = _svg_open("One-vs-rest ROC")
    parts += _axis_frame("false positive rate", "true positive rate")
    d0 = _scale(0.0, 0.0, 1.0)
    d1 = _scale(1.0, 0.0, 1.0)
    parts.append(f'<line x1="{d0:.2f}" y1="{_scale(0.0, 0.0, 1.0, True):.2f}" '
                 f'x2="{d1:.2f}" y2="{_scale(1.0, 0.0, 1.0, True):.2f}" '
                 f'stroke="#999999" stroke-dasharray="4 3"/>')
    for idx, curve in enumerate(curves):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = " ".join(
            f"{_scale(fpr, 0.0, 1.0):.2f},{_scale(tpr, 0.0, 1.0, True):.2f}"
            for fpr, tpr in curve.points)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        parts.append(f'<text x="{_SVG_MARGIN + 8}" y="{_SVG_MARGIN + 16 + 16 * idx}" '
                     f'font-family="sans-serif" font-size="12" fill="{color}">'
                     f'{curve.group.value} AUC={curve.auc:.3f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def bland_altman_svg(report: AgreementReport) -> str:
    """Deterministic SVG scatter of mean vs difference with limit lines."""
    means = report.means
    diffs = report.differences
    x_lo, x_hi = float(means.min()), float(means.max())
    pad_x = 0.05 * (x_hi - x_lo or 1.0)
    x_lo, x_hi = x_lo - pad_x, x_hi + pad_x
    y_values = np.concatenate([diffs, [report.lower_limit, report.upper_limit]])
    y_lo, y_hi = float(y_values.min()), float(y_values.max())
    pad_y = 0.1 * (y_hi - y_lo or 1.0)
    y_lo, y_hi = y_lo - pad_y, y_hi + pad_y

    parts = _svg_open("Agreement: actual vs predicted months")
    parts += _axis_frame("mean of pair (months)", "difference (months)")
    for x, y in zip(means, diffs):
        parts.append(f'<circle cx="{_scale(x, x_lo, x_hi):.2f}" '
                     f'cy="{_scale(y, y_lo, y_hi, True):.2f}" r="2.5" '
                     f'fill="#1f77b4" fill-opacity="0.55"/>')
    for value, dash, label in (
            (report.bias, "", f"bias {report.bias:.2f}"),
            (report.lower_limit, "5 4", f"lower {report.lower_limit:.2f}"),
            (report.upper_limit, "5 4", f"upper {report.upper_limit:.2f}")):
        y = _scale(value, y_lo, y_hi, True)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        parts.append(f'<line x1="{_SVG_MARGIN}" y1="{y:.2f}" '
                     f'x2="{_SVG_SIZE - _SVG_MARGIN}" y2="{y:.2f}" '
                     f'stroke="#d62728"{dash_attr}/>')
        parts.append(f'<text x="{_SVG_SIZE - _SVG_MARGIN - 4}" y="{y - 4:.2f}" '
                     f'text-anchor="end" font-family="sans-serif" font-size="11" '
                     f'fill="#d62728">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
