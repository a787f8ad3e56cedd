"""Patient data model, registry CSV ingestion, completeness reporting and
calibrated synthetic cohort generation with a planted outcome mechanism.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields as dataclass_fields
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    CorruptFile,
    EmptyCohort,
    InvalidSpec,
    MissingColumn,
    RangeViolation,
    TypeViolation,
)

SEXES = ("male", "female")
BIOLOGICS = ("adalimumab", "etanercept", "infliximab", "ustekinumab")


class OutcomeLabel(Enum):
    """Reason recorded at the last observation of a treatment series."""

    ADVERSE_EVENT = "adverse_event"
    PATIENT_DECISION = "patient_decision"
    LACK_OF_EFFICACY = "lack_of_efficacy"
    LOSS_TO_FOLLOW_UP = "loss_to_follow_up"
    OTHER = "other"
    CONTINUE = "continue"


OUTCOMES: tuple[OutcomeLabel, ...] = tuple(OutcomeLabel)
OUTCOME_INDEX: dict[OutcomeLabel, int] = {label: i for i, label in enumerate(OUTCOMES)}
N_CLASSES = len(OUTCOMES)


class RocGroup(Enum):
    """One-vs-rest groupings used for ROC reporting."""

    ANY_REASON = "any_reason"
    LACK_OF_EFFICACY = "lack_of_efficacy"
    ADVERSE_EVENT = "adverse_event"
    OTHER_REASONS = "other_reasons"


ROC_GROUP_POSITIVES: dict[RocGroup, tuple[OutcomeLabel, ...]] = {
    RocGroup.ANY_REASON: (
        OutcomeLabel.ADVERSE_EVENT,
        OutcomeLabel.PATIENT_DECISION,
        OutcomeLabel.LACK_OF_EFFICACY,
        OutcomeLabel.LOSS_TO_FOLLOW_UP,
        OutcomeLabel.OTHER,
    ),
    RocGroup.LACK_OF_EFFICACY: (OutcomeLabel.LACK_OF_EFFICACY,),
    RocGroup.ADVERSE_EVENT: (OutcomeLabel.ADVERSE_EVENT,),
    RocGroup.OTHER_REASONS: (
        OutcomeLabel.PATIENT_DECISION,
        OutcomeLabel.LOSS_TO_FOLLOW_UP,
        OutcomeLabel.OTHER,
    ),
}


def group_outcomes(label: OutcomeLabel) -> frozenset[RocGroup]:
    """Map an outcome label to the ROC groups it belongs to.

    Continue belongs to no discontinuation group; every other label belongs
    to ANY_REASON plus exactly one cause-specific group.
    """
    if label is OutcomeLabel.CONTINUE:
        return frozenset()
    for group in (RocGroup.LACK_OF_EFFICACY, RocGroup.ADVERSE_EVENT, RocGroup.OTHER_REASONS):
        if label in ROC_GROUP_POSITIVES[group]:
            return frozenset({RocGroup.ANY_REASON, group})
    raise AssertionError(f"unmapped label {label}")


CSV_COLUMNS = (
    "age_years",
    "sex",
    "height_cm",
    "weight_kg",
    "comorbidity_count",
    "age_at_diagnosis",
    "psa_diagnosis",
    "previous_mtx",
    "concurrent_mtx",
    "previous_biologic",
    "baseline_dlqi",
    "baseline_pasi",
    "biologic",
    "repeat_series",
    "treatment_length_months",
    "outcome",
)

# Observed ranges used as default feasible intervals for profile search.
# Treatment length has no tabulated range; the registry window caps it.
FEASIBLE_RANGES: dict[str, tuple[float, float]] = {
    "age_years": (9.0, 83.0),
    "height_cm": (110.0, 198.0),
    "weight_kg": (30.0, 180.0),
    "comorbidity_count": (0.0, 5.0),
    "age_at_diagnosis": (9.0, 70.0),
    "baseline_dlqi": (0.0, 32.0),
    "baseline_pasi": (0.0, 39.4),
    "treatment_length_months": (0.0, 132.0),
}


@dataclass(frozen=True)
class PatientRecord:
    """One registry row: baseline features, observed length and outcome.

    Optional fields use None for "not recorded"; absence is distinct from
    zero. ``outcome`` may be None only for prediction queries, never in a
    stored cohort.
    """

    age_years: float
    sex: str
    height_cm: float | None
    weight_kg: float | None
    comorbidity_count: int | None
    age_at_diagnosis: float | None
    psa_diagnosis: bool
    previous_mtx: bool
    concurrent_mtx: bool | None
    previous_biologic: bool
    baseline_dlqi: float | None
    baseline_pasi: float | None
    biologic: str
    repeat_series: bool
    treatment_length_months: float
    outcome: OutcomeLabel | None = None

    def __post_init__(self):
        _check(self.sex in SEXES, "sex", f"must be one of {SEXES}, got {self.sex!r}")
        _check(self.biologic in BIOLOGICS, "biologic",
               f"must be one of {BIOLOGICS}, got {self.biologic!r}")
        _check(0.0 <= self.age_years <= 120.0, "age_years",
               f"must be within [0, 120], got {self.age_years}")
        if self.height_cm is not None:
            _check(self.height_cm > 0, "height_cm", f"must be positive, got {self.height_cm}")
        if self.weight_kg is not None:
            _check(self.weight_kg > 0, "weight_kg", f"must be positive, got {self.weight_kg}")
        if self.comorbidity_count is not None:
            _check(self.comorbidity_count >= 0, "comorbidity_count",
                   f"must be >= 0, got {self.comorbidity_count}")
        if self.age_at_diagnosis is not None:
            _check(0.0 <= self.age_at_diagnosis <= self.age_years, "age_at_diagnosis",
                   f"must be within [0, age_years={self.age_years}], got {self.age_at_diagnosis}")
        if self.baseline_dlqi is not None:
            _check(0.0 <= self.baseline_dlqi <= 32.0, "baseline_dlqi",
                   f"must be within [0, 32], got {self.baseline_dlqi}")
        if self.baseline_pasi is not None:
            _check(0.0 <= self.baseline_pasi <= 72.0, "baseline_pasi",
                   f"must be within [0, 72], got {self.baseline_pasi}")
        _check(self.treatment_length_months >= 0.0, "treatment_length_months",
               f"must be >= 0, got {self.treatment_length_months}")


def _check(condition: bool, column: str, message: str) -> None:
    if not condition:
        raise RangeViolation(message, column=column)


# ---------------------------------------------------------------------------
# CSV ingestion / export
# ---------------------------------------------------------------------------

_OUTCOME_BY_VALUE = {label.value: label for label in OUTCOMES}


def _parse_float(raw: str, row: int, column: str, optional: bool) -> float | None:
    if raw == "":
        if optional:
            return None
        raise TypeViolation("missing required value", row=row, column=column)
    try:
        return float(raw)
    except ValueError:
        raise TypeViolation(f"expected a number, got {raw!r}", row=row, column=column) from None


def _parse_int(raw: str, row: int, column: str, optional: bool) -> int | None:
    if raw == "":
        if optional:
            return None
        raise TypeViolation("missing required value", row=row, column=column)
    try:
        return int(raw)
    except ValueError:
        raise TypeViolation(f"expected an integer, got {raw!r}", row=row, column=column) from None


def _parse_bool(raw: str, row: int, column: str, optional: bool) -> bool | None:
    if raw == "":
        if optional:
            return None
        raise TypeViolation("missing required value", row=row, column=column)
    if raw == "0":
        return False
    if raw == "1":
        return True
    raise TypeViolation(f"expected 0 or 1, got {raw!r}", row=row, column=column)


def parse_row(values: Sequence[str], row: int, require_outcome: bool = True) -> PatientRecord:
    """Parse one CSV data row (already split into fields) into a record."""
    if len(values) != len(CSV_COLUMNS):
        raise TypeViolation(
            f"expected {len(CSV_COLUMNS)} fields, got {len(values)}", row=row)
    cell = dict(zip(CSV_COLUMNS, (v.strip() for v in values)))

    outcome_raw = cell["outcome"]
    if outcome_raw == "":
        if require_outcome:
            raise TypeViolation("missing required value", row=row, column="outcome")
        outcome = None
    else:
        outcome = _OUTCOME_BY_VALUE.get(outcome_raw)
        if outcome is None:
            raise TypeViolation(
                f"unknown outcome {outcome_raw!r}", row=row, column="outcome")

    sex = cell["sex"]
    if sex not in SEXES:
        raise TypeViolation(f"expected one of {SEXES}, got {sex!r}", row=row, column="sex")
    biologic = cell["biologic"]
    if biologic not in BIOLOGICS:
        raise TypeViolation(
            f"expected one of {BIOLOGICS}, got {biologic!r}", row=row, column="biologic")

    try:
        return PatientRecord(
            age_years=_parse_float(cell["age_years"], row, "age_years", False),
            sex=sex,
            height_cm=_parse_float(cell["height_cm"], row, "height_cm", True),
            weight_kg=_parse_float(cell["weight_kg"], row, "weight_kg", True),
            comorbidity_count=_parse_int(cell["comorbidity_count"], row, "comorbidity_count", True),
            age_at_diagnosis=_parse_float(cell["age_at_diagnosis"], row, "age_at_diagnosis", True),
            psa_diagnosis=_parse_bool(cell["psa_diagnosis"], row, "psa_diagnosis", False),
            previous_mtx=_parse_bool(cell["previous_mtx"], row, "previous_mtx", False),
            concurrent_mtx=_parse_bool(cell["concurrent_mtx"], row, "concurrent_mtx", True),
            previous_biologic=_parse_bool(cell["previous_biologic"], row, "previous_biologic", False),
            baseline_dlqi=_parse_float(cell["baseline_dlqi"], row, "baseline_dlqi", True),
            baseline_pasi=_parse_float(cell["baseline_pasi"], row, "baseline_pasi", True),
            biologic=biologic,
            repeat_series=_parse_bool(cell["repeat_series"], row, "repeat_series", False),
            treatment_length_months=_parse_float(
                cell["treatment_length_months"], row, "treatment_length_months", False),
            outcome=outcome,
        )
    except RangeViolation as err:
        raise RangeViolation(str(err.args[0] if err.args else err),
                             row=row, column=err.column) from None


def load_cohort(path: str | Path, require_outcome: bool = True) -> list[PatientRecord]:
    """Load a cohort CSV, rejecting malformed rows with located diagnostics.

    Row numbers in diagnostics are 1-based data-row indices (the header is
    row 0). File order is preserved. Prediction inputs may leave the
    outcome cell empty by passing require_outcome=False.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as err:
        raise CorruptFile(f"cannot read cohort file {path}: {err}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn(f"{path}: file is empty, expected header row") from None
        if tuple(h.strip() for h in header) != CSV_COLUMNS:
            missing = [c for c in CSV_COLUMNS if c not in header]
            extra = [c for c in header if c.strip() not in CSV_COLUMNS]
            raise MissingColumn(
                f"{path}: header mismatch; missing {missing or 'none'}, unexpected {extra or 'none'}")
        records = []
        for i, values in enumerate(reader, start=1):
            if not values:
                continue
            records.append(parse_row(values, row=i, require_outcome=require_outcome))
    return records


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, OutcomeLabel):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def save_cohort(records: Sequence[PatientRecord], path: str | Path) -> None:
    """Write records as the cohort CSV. Round-trips exactly via load_cohort."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([_format_cell(getattr(rec, col)) for col in CSV_COLUMNS])


def completeness_report(records: Sequence[PatientRecord]) -> list[tuple[str, float]]:
    """Percent of non-missing values per schema feature, 2 decimals."""
    if not records:
        raise EmptyCohort("completeness_report needs at least one record")
    n = len(records)
    report = []
    for col in CSV_COLUMNS:
        present = sum(1 for rec in records if getattr(rec, col) is not None)
        report.append((col, round(100.0 * present / n, 2)))
    return report


# ---------------------------------------------------------------------------
# Synthetic cohort generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NumericMarginal:
    """Truncated-normal marginal target with a completeness fraction."""

    mean: float
    sd: float
    lo: float
    hi: float
    present: float = 1.0


# Feature map available to the planted mechanisms. Scalings are fixed
# constants of the generator, independent of any fitted schema.
MECHANISM_FEATURES = (
    "age_z",
    "age_at_diagnosis_z",
    "height_z",
    "weight_z",
    "weight_gt_100",
    "dlqi_z",
    "pasi_z",
    "comorbidity_count",
    "male",
    "psa_diagnosis",
    "previous_mtx",
    "concurrent_mtx",
    "previous_biologic",
    "repeat_series",
    "biologic=adalimumab",
    "biologic=etanercept",
    "biologic=infliximab",
    "biologic=ustekinumab",
    "length_z",
    "length_lt_12",
    "length_lt_24",
    "infliximab_early",
)
# Length is generated before outcomes, so only outcome coefficients may
# reference it.
_LENGTH_ONLY_FEATURES = frozenset({"length_z", "length_lt_12", "length_lt_24", "infliximab_early"})


@dataclass(frozen=True)
class CohortSpec:
    """Marginal targets plus planted outcome/length mechanisms.

    ``outcome_coefficients`` maps mechanism feature names to one coefficient
    per outcome class (declared label order); scores are softmaxed and the
    label drawn. ``length_coefficients`` define the linear treatment-length
    signal; Gaussian noise is added and the result truncated at 0.
    """

    n: int
    seed: int
    age: NumericMarginal
    height: NumericMarginal
    weight: NumericMarginal
    age_at_diagnosis: NumericMarginal
    dlqi: NumericMarginal
    pasi: NumericMarginal
    male_share: float
    comorbidity_weights: tuple[float, ...]
    comorbidity_present: float
    psa_share: float
    previous_mtx_share: float
    concurrent_mtx_share: float
    concurrent_mtx_present: float
    previous_biologic_share: float
    biologic_weights: tuple[float, float, float, float]
    repeat_series_share: float
    outcome_intercepts: tuple[float, ...]
    outcome_coefficients: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    length_intercept: float = 36.0
    length_coefficients: Mapping[str, float] = field(default_factory=dict)
    length_noise_sd: float = 5.6

    def validate(self) -> None:
        if not isinstance(self.n, int) or self.n <= 0:
            raise InvalidSpec(f"n must be a positive integer, got {self.n!r}")
        for name in ("age", "height", "weight", "age_at_diagnosis", "dlqi", "pasi"):
            m: NumericMarginal = getattr(self, name)
            if m.sd <= 0:
                raise InvalidSpec(f"{name}: sd must be positive, got {m.sd}")
            if not (m.lo <= m.mean <= m.hi):
                raise InvalidSpec(f"{name}: mean {m.mean} outside range [{m.lo}, {m.hi}]")
            if not (0.0 <= m.present <= 1.0):
                raise InvalidSpec(f"{name}: completeness {m.present} outside [0, 1]")
        for name in ("male_share", "psa_share", "previous_mtx_share", "concurrent_mtx_share",
                     "concurrent_mtx_present", "previous_biologic_share", "repeat_series_share",
                     "comorbidity_present"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise InvalidSpec(f"{name} must be within [0, 1], got {v}")
        for name, weights in (("comorbidity_weights", self.comorbidity_weights),
                              ("biologic_weights", self.biologic_weights)):
            if not weights or any(w < 0 for w in weights) or sum(weights) <= 0:
                raise InvalidSpec(f"{name} must be non-negative with positive sum")
        if len(self.biologic_weights) != len(BIOLOGICS):
            raise InvalidSpec("biologic_weights must have one entry per biologic")
        if len(self.outcome_intercepts) != N_CLASSES:
            raise InvalidSpec(f"outcome_intercepts must have {N_CLASSES} entries")
        for key, coefs in self.outcome_coefficients.items():
            if key not in MECHANISM_FEATURES:
                raise InvalidSpec(f"unknown mechanism feature {key!r}")
            if len(coefs) != N_CLASSES:
                raise InvalidSpec(f"outcome coefficients for {key!r} must have {N_CLASSES} entries")
        for key in self.length_coefficients:
            if key not in MECHANISM_FEATURES:
                raise InvalidSpec(f"unknown mechanism feature {key!r}")
            if key in _LENGTH_ONLY_FEATURES:
                raise InvalidSpec(f"length mechanism cannot reference {key!r}")
        if self.length_noise_sd < 0:
            raise InvalidSpec(f"length_noise_sd must be >= 0, got {self.length_noise_sd}")


@dataclass(frozen=True)
class SynthesisDetail:
    """Generator output plus the planted ground truth used to produce it."""

    records: list[PatientRecord]
    class_probabilities: np.ndarray  # (n, 6) planted softmax per record
    length_signal: np.ndarray        # noiseless length before truncation


def _phi(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def _cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def _truncated_mean(loc: float, sd: float, lo: float, hi: float) -> float:
    a, b = (lo - loc) / sd, (hi - loc) / sd
    mass = _cdf(b) - _cdf(a)
    if mass <= 1e-12:
        return min(max(loc, lo), hi)
    return loc + sd * (_phi(a) - _phi(b)) / mass


def _tn_location(target_mean: float, sd: float, lo: float, hi: float) -> float:
    """Location parameter whose truncated-normal mean equals the target."""
    lo_loc, hi_loc = target_mean - 6 * sd, target_mean + 6 * sd
    for _ in range(80):
        mid = 0.5 * (lo_loc + hi_loc)
        if _truncated_mean(mid, sd, lo, hi) < target_mean:
            lo_loc = mid
        else:
            hi_loc = mid
    return 0.5 * (lo_loc + hi_loc)


def _draw_truncated(rng: np.random.Generator, loc: float, sd: float,
                    lo: float | np.ndarray, hi: float | np.ndarray, size: int) -> np.ndarray:
    """Rejection-sample a truncated normal; bounds may vary per element."""
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (size,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (size,))
    out = np.where(hi - lo < 1e-9, lo, np.nan)
    pending = np.isnan(out)
    for _ in range(1000):
        if not pending.any():
            break
        draw = rng.normal(loc, sd, size=int(pending.sum()))
        idx = np.flatnonzero(pending)
        ok = (draw >= lo[idx]) & (draw <= hi[idx])
        out[idx[ok]] = draw[ok]
        pending = np.isnan(out)
    if pending.any():
        # Target interval too far in the tail for rejection; pin to the edge.
        out[pending] = np.clip(loc, lo[pending], hi[pending])
    return out


def _mechanism_matrix(latent: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    f: dict[str, np.ndarray] = {}
    f["age_z"] = (latent["age_years"] - 42.8) / 13.0
    f["age_at_diagnosis_z"] = (latent["age_at_diagnosis"] - 25.8) / 12.0
    f["height_z"] = (latent["height_cm"] - 174.1) / 9.0
    f["weight_z"] = (latent["weight_kg"] - 85.6) / 20.0
    f["weight_gt_100"] = (latent["weight_kg"] > 100.0).astype(float)
    f["dlqi_z"] = (latent["baseline_dlqi"] - 13.6) / 7.0
    f["pasi_z"] = (latent["baseline_pasi"] - 10.5) / 6.0
    f["comorbidity_count"] = latent["comorbidity_count"].astype(float)
    f["male"] = latent["male"].astype(float)
    f["psa_diagnosis"] = latent["psa_diagnosis"].astype(float)
    f["previous_mtx"] = latent["previous_mtx"].astype(float)
    f["concurrent_mtx"] = latent["concurrent_mtx"].astype(float)
    f["previous_biologic"] = latent["previous_biologic"].astype(float)
    f["repeat_series"] = latent["repeat_series"].astype(float)
    for i, drug in enumerate(BIOLOGICS):
        f[f"biologic={drug}"] = (latent["biologic"] == i).astype(float)
    if "treatment_length_months" in latent:
        length = latent["treatment_length_months"]
        f["length_z"] = (length - 36.0) / 15.0
        f["length_lt_12"] = (length < 12.0).astype(float)
        f["length_lt_24"] = (length < 24.0).astype(float)
        f["infliximab_early"] = f["biologic=infliximab"] * f["length_lt_24"]
    return f


def _linear_scores(features: dict[str, np.ndarray], intercepts: Sequence[float],
                   coefficients: Mapping[str, Sequence[float]], n: int) -> np.ndarray:
    scores = np.tile(np.asarray(intercepts, dtype=float), (n, 1))
    for name, coefs in coefficients.items():
        scores += np.outer(features[name], np.asarray(coefs, dtype=float))
    return scores


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def synthesize_cohort_detailed(spec: CohortSpec) -> SynthesisDetail:
    """Generate a cohort and keep the planted truth for oracle checks.

    The mechanism sees the complete latent record; missingness masks are
    applied afterwards, so feature absence is independent of the outcome.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.n

    def tn(m: NumericMarginal, lo=None, hi=None) -> np.ndarray:
        loc = _tn_location(m.mean, m.sd, m.lo, m.hi)
        return _draw_truncated(rng, loc, m.sd, m.lo if lo is None else lo,
                               m.hi if hi is None else hi, n)

    def mask(p_present: float) -> np.ndarray:
        return rng.random(n) < p_present

    age = tn(spec.age)
    male = rng.random(n) < spec.male_share
    height = tn(spec.height)
    height_mask = mask(spec.height.present)
    weight = tn(spec.weight)
    weight_mask = mask(spec.weight.present)
    com_probs = np.asarray(spec.comorbidity_weights, dtype=float)
    com_probs = com_probs / com_probs.sum()
    comorbidity = rng.choice(len(com_probs), size=n, p=com_probs)
    comorbidity_mask = mask(spec.comorbidity_present)
    aad_hi = np.minimum(spec.age_at_diagnosis.hi, age)
    aad_lo = np.minimum(spec.age_at_diagnosis.lo, aad_hi)
    aad_loc = _tn_location(spec.age_at_diagnosis.mean, spec.age_at_diagnosis.sd,
                           spec.age_at_diagnosis.lo, spec.age_at_diagnosis.hi)
    age_at_diagnosis = _draw_truncated(rng, aad_loc, spec.age_at_diagnosis.sd, aad_lo, aad_hi, n)
    aad_mask = mask(spec.age_at_diagnosis.present)
    psa = rng.random(n) < spec.psa_share
    previous_mtx = rng.random(n) < spec.previous_mtx_share
    concurrent_mtx = rng.random(n) < spec.concurrent_mtx_share
    concurrent_mask = mask(spec.concurrent_mtx_present)
    previous_biologic = rng.random(n) < spec.previous_biologic_share
    dlqi = tn(spec.dlqi)
    dlqi_mask = mask(spec.dlqi.present)
    pasi = tn(spec.pasi)
    pasi_mask = mask(spec.pasi.present)
    bio_probs = np.asarray(spec.biologic_weights, dtype=float)
    bio_probs = bio_probs / bio_probs.sum()
    biologic = rng.choice(len(BIOLOGICS), size=n, p=bio_probs)
    repeat_series = rng.random(n) < spec.repeat_series_share

    latent = {
        "age_years": age,
        "height_cm": height,
        "weight_kg": weight,
        "comorbidity_count": comorbidity,
        "age_at_diagnosis": age_at_diagnosis,
        "baseline_dlqi": dlqi,
        "baseline_pasi": pasi,
        "male": male,
        "psa_diagnosis": psa,
        "previous_mtx": previous_mtx,
        "concurrent_mtx": concurrent_mtx,
        "previous_biologic": previous_biologic,
        "repeat_series": repeat_series,
        "biologic": biologic,
    }
    features = _mechanism_matrix(latent)

    length_signal = np.full(n, spec.length_intercept, dtype=float)
    for name, coef in spec.length_coefficients.items():
        length_signal += coef * features[name]
    length = length_signal + rng.normal(0.0, spec.length_noise_sd, size=n)
    length = np.maximum(length, 0.0)

    latent["treatment_length_months"] = length
    features = _mechanism_matrix(latent)
    scores = _linear_scores(features, spec.outcome_intercepts, spec.outcome_coefficients, n)
    probs = _softmax(scores)
    u = rng.random(n)
    outcome_idx = (u[:, None] > np.cumsum(probs, axis=1)).sum(axis=1)
    outcome_idx = np.minimum(outcome_idx, N_CLASSES - 1)

    records = []
    for i in range(n):
        records.append(PatientRecord(
            age_years=float(age[i]),
            sex="male" if male[i] else "female",
            height_cm=float(height[i]) if height_mask[i] else None,
            weight_kg=float(weight[i]) if weight_mask[i] else None,
            comorbidity_count=int(comorbidity[i]) if comorbidity_mask[i] else None,
            age_at_diagnosis=float(age_at_diagnosis[i]) if aad_mask[i] else None,
            psa_diagnosis=bool(psa[i]),
            previous_mtx=bool(previous_mtx[i]),
            concurrent_mtx=bool(concurrent_mtx[i]) if concurrent_mask[i] else None,
            previous_biologic=bool(previous_biologic[i]),
            baseline_dlqi=float(dlqi[i]) if dlqi_mask[i] else None,
            baseline_pasi=float(pasi[i]) if pasi_mask[i] else None,
            biologic=BIOLOGICS[int(biologic[i])],
            repeat_series=bool(repeat_series[i]),
            treatment_length_months=float(length[i]),
            outcome=OUTCOMES[int(outcome_idx[i])],
        ))
    return SynthesisDetail(records=records, class_probabilities=probs,
                           length_signal=length_signal)


def synthesize_cohort(spec: CohortSpec) -> list[PatientRecord]:
    """Generate a synthetic cohort; deterministic for a given spec and seed."""
    return synthesize_cohort_detailed(spec).records


def spec_to_dict(spec: CohortSpec) -> dict:
    """JSON-able form of a CohortSpec; inverse of spec_from_dict."""
    import dataclasses

    data = dataclasses.asdict(spec)
    data["outcome_coefficients"] = {k: list(v) for k, v in spec.outcome_coefficients.items()}
    data["length_coefficients"] = dict(spec.length_coefficients)
    return data


def spec_from_dict(data: Mapping) -> CohortSpec:
    """Build a CohortSpec from parsed JSON.

    Accepts either a full field set or {"preset": name, ...overrides} where
    presets are dermbio_like and weight_step.
    """
    data = dict(data)
    preset = data.pop("preset", None)
    if preset is not None:
        factory = {"dermbio_like": dermbio_like_spec, "weight_step": weight_step_spec}.get(preset)
        if factory is None:
            raise InvalidSpec(f"unknown preset {preset!r}")
        base = factory(n=int(data.pop("n", 681)), seed=int(data.pop("seed", 42)))
        if data:
            raise InvalidSpec(f"preset specs only accept n and seed overrides, got {sorted(data)}")
        return base
    try:
        marginals = {name: NumericMarginal(**data.pop(name))
                     for name in ("age", "height", "weight", "age_at_diagnosis", "dlqi", "pasi")}
        spec = CohortSpec(
            n=int(data.pop("n")),
            seed=int(data.pop("seed")),
            **marginals,
            male_share=float(data.pop("male_share")),
            comorbidity_weights=tuple(data.pop("comorbidity_weights")),
            comorbidity_present=float(data.pop("comorbidity_present")),
            psa_share=float(data.pop("psa_share")),
            previous_mtx_share=float(data.pop("previous_mtx_share")),
            concurrent_mtx_share=float(data.pop("concurrent_mtx_share")),
            concurrent_mtx_present=float(data.pop("concurrent_mtx_present")),
            previous_biologic_share=float(data.pop("previous_biologic_share")),
            biologic_weights=tuple(data.pop("biologic_weights")),
            repeat_series_share=float(data.pop("repeat_series_share")),
            outcome_intercepts=tuple(data.pop("outcome_intercepts")),
            outcome_coefficients={k: tuple(v)
                                  for k, v in data.pop("outcome_coefficients", {}).items()},
            length_intercept=float(data.pop("length_intercept", 36.0)),
            length_coefficients=dict(data.pop("length_coefficients", {})),
            length_noise_sd=float(data.pop("length_noise_sd", 5.6)),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise InvalidSpec(f"malformed cohort spec: {err}") from None
    if data:
        raise InvalidSpec(f"unknown cohort spec fields: {sorted(data)}")
    spec.validate()
    return spec


def dermbio_like_spec(n: int = 681, seed: int = 42) -> CohortSpec:
    """Default spec calibrated to the published registry summary table.

    The planted outcome mechanism leans on treatment length, comorbidity
    burden, previous biologic exposure, weight above 100 kg and the
    infliximab-early pattern;
    the length mechanism keeps its signal on fully observed features so a
    regressor can recover it.
    """
    return CohortSpec(
        n=n,
        seed=seed,
        age=NumericMarginal(42.8, 13.0, 9.0, 83.0),
        height=NumericMarginal(174.1, 9.0, 110.0, 198.0, present=0.7474),
        weight=NumericMarginal(85.6, 20.0, 30.0, 180.0, present=0.5727),
        age_at_diagnosis=NumericMarginal(25.84, 11.0, 9.0, 70.0, present=0.8032),
        dlqi=NumericMarginal(13.56, 7.2, 0.0, 32.0, present=0.3818),
        pasi=NumericMarginal(10.5, 6.0, 0.0, 39.4, present=0.0825),
        male_share=375 / 681,
        comorbidity_weights=(395, 136, 40, 14, 5, 3),
        comorbidity_present=0.8708,
        psa_share=227 / 681,
        previous_mtx_share=138 / 681,
        concurrent_mtx_share=49 / 368,
        concurrent_mtx_present=0.5404,
        previous_biologic_share=217 / 681,
        biologic_weights=(253, 196, 117, 115),
        repeat_series_share=433 / 681,
        outcome_intercepts=(-2.05, -2.9, -2.6, -4.1, -3.3, 0.0),
        outcome_coefficients={
            "length_z": (0.3, 0.0, -3.8, 0.0, 0.0, 3.8),
            "length_lt_12": (0.2, 0.0, 0.15, 0.0, 0.0, -0.15),
            "comorbidity_count": (1.3, 0.0, 0.0, 0.0, 0.0, 0.15),
            "previous_biologic": (0.3, 0.0, 0.5, 0.0, 0.0, -0.5),
            "weight_gt_100": (0.1, 0.0, 0.3, 0.0, 0.0, -0.3),
            "biologic=infliximab": (0.0, 0.0, 0.4, 0.0, 0.0, -0.3),
            "infliximab_early": (0.0, 0.0, 0.3, 0.0, 0.0, -0.2),
            "biologic=ustekinumab": (-0.15, 0.0, -0.25, 0.0, 0.0, 0.35),
            "psa_diagnosis": (0.1, 0.0, 0.2, 0.0, 0.0, -0.25),
            "age_z": (0.2, 0.0, 0.1, 0.0, 0.0, -0.15),
        },
        length_intercept=35.0,
        length_coefficients={
            "age_z": -9.7,
            "previous_biologic": -14.9,
            "biologic=ustekinumab": 13.4,
            "biologic=infliximab": -8.9,
            "psa_diagnosis": -7.5,
            "male": 5.2,
            "previous_mtx": -6.0,
            "repeat_series": 6.0,
        },
        length_noise_sd=5.6,
    )


def weight_step_spec(n: int = 681, seed: int = 7) -> CohortSpec:
    """Spec whose outcome mechanism is a sharp step at weight = 100 kg.

    Weight is fully observed here so threshold-recovery checks see the raw
    values. Below the step patients overwhelmingly continue; above it they
    mostly stop for lack of efficacy.
    """
    base = dermbio_like_spec(n=n, seed=seed)
    return CohortSpec(
        n=n,
        seed=seed,
        age=base.age,
        height=base.height,
        weight=NumericMarginal(85.6, 20.0, 30.0, 180.0, present=1.0),
        age_at_diagnosis=base.age_at_diagnosis,
        dlqi=base.dlqi,
        pasi=base.pasi,
        male_share=base.male_share,
        comorbidity_weights=base.comorbidity_weights,
        comorbidity_present=base.comorbidity_present,
        psa_share=base.psa_share,
        previous_mtx_share=base.previous_mtx_share,
        concurrent_mtx_share=base.concurrent_mtx_share,
        concurrent_mtx_present=base.concurrent_mtx_present,
        previous_biologic_share=base.previous_biologic_share,
        biologic_weights=base.biologic_weights,
        repeat_series_share=base.repeat_series_share,
        outcome_intercepts=(-1.2, -2.5, -1.5, -3.5, -3.0, 1.8),
        outcome_coefficients={
            "weight_gt_100": (0.8, 0.0, 3.4, 0.0, 0.0, -2.6),
        },
        length_intercept=base.length_intercept,
        length_coefficients=dict(base.length_coefficients),
        length_noise_sd=base.length_noise_sd,
    )
