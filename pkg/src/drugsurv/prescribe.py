"""Input optimization: search feasible feature settings for a target
outcome probability and extract per-feature threshold constraints.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .cohort import BIOLOGICS, FEASIBLE_RANGES, OUTCOME_INDEX, OutcomeLabel, SEXES
from .errors import FingerprintMismatch, UnknownFeature
from .learn import ModelArtifact, predict_proba
from .preprocess import FeatureSchema

_BOOLEAN_SOURCES = frozenset({
    "psa_diagnosis", "previous_mtx", "concurrent_mtx",
    "previous_biologic", "repeat_series",
})
_LEVELS = {"sex": SEXES, "biologic": BIOLOGICS}
DEFAULT_GRID_POINTS = 50
MAX_SWEEPS = 10


@dataclass(frozen=True)
class Profile:
    """One value per input feature plus the predicted probability vector."""

    values: Mapping[str, float | str]
    probabilities: np.ndarray


@dataclass(frozen=True)
class ProfileConstraint:
    """One-sided or membership constraint achieving the target probability.

    ``relation`` is one of <=, >=, =, in; for "in" the boundary is a tuple
    of category levels. ``probability`` is P(target) at the boundary with
    every other feature held at the optimized profile.
    """

    feature: str
    relation: str
    boundary: float | str | tuple[str, ...]
    probability: float


@dataclass(frozen=True)
class OptimizationResult:
    """Optimized profile, its constraints and reachability of the target."""

    profile: Profile
    constraints: tuple[ProfileConstraint, ...]
    target_class: str
    min_probability: float
    target_reachable: bool

    def to_json_dict(self) -> dict:
        return {
            "target_class": self.target_class,
            "min_probability": self.min_probability,
            "target_reachable": self.target_reachable,
            "profile": {k: v for k, v in self.profile.values.items()},
            "probabilities": {
                label.value: float(p)
                for label, p in zip(OutcomeLabel, self.profile.probabilities)},
            "constraints": [
                {"feature": c.feature, "relation": c.relation,
                 "boundary": list(c.boundary) if isinstance(c.boundary, tuple) else c.boundary,
                 "probability": c.probability}
                for c in self.constraints],
        }


def profile_features(schema: FeatureSchema) -> list[str]:
    """Source features of the schema, in schema order, one entry each."""
    seen: list[str] = []
    for col in schema.columns:
        if col.source not in seen:
            seen.append(col.source)
    return seen


def default_grid(feature: str, points: int = DEFAULT_GRID_POINTS) -> list:
    """Feasible-value grid: uniform steps for numerics, all levels for
    categoricals, {0,1} for booleans, integer counts for comorbidities.
    """
    if feature in _LEVELS:
        return list(_LEVELS[feature])
    if feature in _BOOLEAN_SOURCES:
        return [0.0, 1.0]
    if feature == "comorbidity_count":
        lo, hi = FEASIBLE_RANGES[feature]
        return [float(v) for v in range(int(lo), int(hi) + 1)]
    lo, hi = FEASIBLE_RANGES[feature]
    return [float(v) for v in np.linspace(lo, hi, points)]


def _grids_for(schema: FeatureSchema, grids: Mapping[str, Sequence] | None,
               points: int) -> dict[str, list]:
    out = {}
    for feature in profile_features(schema):
        if grids is not None and feature in grids:
            out[feature] = list(grids[feature])
        else:
            out[feature] = default_grid(feature, points)
    return out


def encode_profile(values: Mapping[str, float | str], schema: FeatureSchema) -> np.ndarray:
    """Encode a fully observed hypothetical patient as one design row.

    Missing indicators are fixed at 0: profiles describe patients whose
    every feature is known.
    """
    row = np.zeros(schema.n_columns)
    for j, col in enumerate(schema.columns):
        if col.source not in values:
            raise UnknownFeature(f"profile is missing feature {col.source!r}")
        v = values[col.source]
        if col.kind == "numeric":
            row[j] = (float(v) - col.mean) / col.sd
        elif col.kind == "onehot":
            row[j] = 1.0 if v == col.name.split("=", 1)[1] else 0.0
    return row


def start_profile(schema: FeatureSchema,
                  grids: Mapping[str, Sequence] | None = None,
                  points: int = DEFAULT_GRID_POINTS) -> dict[str, float | str]:
    """Cohort mean/mode start point, snapped onto the search grid.

    Numeric features take the nearest grid value to the training mean;
    categoricals take the most frequent level (ties to declared order).
    """
    grid_map = _grids_for(schema, grids, points)
    numeric_mean: dict[str, float] = {}
    level_share: dict[str, dict[str, float]] = {}
    for col in schema.columns:
        if col.kind == "numeric":
            numeric_mean[col.source] = col.mean
        elif col.kind == "onehot":
            level_share.setdefault(col.source, {})[col.name.split("=", 1)[1]] = col.mean
    values: dict[str, float | str] = {}
    for feature, grid in grid_map.items():
        if feature in level_share:
            shares = level_share[feature]
            best = max(shares.get(lvl, 0.0) for lvl in grid)
            values[feature] = next(lvl for lvl in grid if shares.get(lvl, 0.0) == best)
        else:
            mean = numeric_mean.get(feature, 0.0)
            idx = int(np.argmin([abs(g - mean) for g in grid]))
            values[feature] = grid[idx]
    return values


def _target_index(target_class: str | OutcomeLabel) -> int:
    if isinstance(target_class, OutcomeLabel):
        return OUTCOME_INDEX[target_class]
    try:
        return OUTCOME_INDEX[OutcomeLabel(target_class)]
    except ValueError:
        raise UnknownFeature(f"unknown outcome class {target_class!r}") from None


def _schema_of(artifact: ModelArtifact, schema: FeatureSchema | None) -> FeatureSchema:
    if schema is None:
        return artifact.schema
    if schema.fingerprint != artifact.schema_fingerprint:
        raise FingerprintMismatch(
            f"schema {schema.fingerprint} does not match the model's "
            f"{artifact.schema_fingerprint}")
    return schema


def _sweep_rows(values: Mapping[str, float | str], schema: FeatureSchema,
                feature: str, grid: Sequence) -> np.ndarray:
    rows = []
    trial = dict(values)
    for v in grid:
        trial[feature] = v
        rows.append(encode_profile(trial, schema))
    return np.vstack(rows)


def sweep_feature(artifact: ModelArtifact, schema: FeatureSchema | None,
                  base_profile: Mapping[str, float | str], feature: str,
                  grid: Sequence | None = None,
                  points: int = DEFAULT_GRID_POINTS) -> tuple[list, np.ndarray]:
    """Probability vectors along one feature's grid, all others fixed.

    Returns (grid values, (m, 6) probability matrix).
    """
    schema = _schema_of(artifact, schema)
    if feature not in profile_features(schema):
        raise UnknownFeature(f"{feature!r} is not an input feature of this model")
    if grid is None:
        grid = default_grid(feature, points)
    grid = list(grid)
    probs = predict_proba(artifact, _sweep_rows(base_profile, schema, feature, grid))
    return grid, probs


def _contiguous_run(ok: np.ndarray, anchor: int) -> tuple[int, int]:
    """Largest [lo, hi] index run of True containing the anchor index."""
    lo = anchor
    while lo > 0 and ok[lo - 1]:
        lo -= 1
    hi = anchor
    while hi < len(ok) - 1 and ok[hi + 1]:
        hi += 1
    return lo, hi


# Product grids at or below this size are scanned exhaustively after the
# ascent: with three or more classes the softmax surface can hold separate
# basins, so ascent alone may stall off the global optimum.
EXACT_SEARCH_LIMIT = 10_000


def _product_argmax(artifact: ModelArtifact, schema: FeatureSchema,
                    grid_map: Mapping[str, Sequence],
                    target: int) -> tuple[dict[str, float | str], float]:
    """Best profile over the full product grid, earliest combination wins."""
    features = list(grid_map)
    sizes = [len(grid_map[f]) for f in features]
    index = np.indices(sizes).reshape(len(sizes), -1).T
    rows = np.zeros((index.shape[0], len(schema.columns)))
    for a, feature in enumerate(features):
        chosen = np.asarray(grid_map[feature], dtype=object)[index[:, a]]
        for j, col in enumerate(schema.columns):
            if col.source != feature:
                continue
            if col.kind == "numeric":
                rows[:, j] = (chosen.astype(float) - col.mean) / col.sd
            elif col.kind == "onehot":
                level = col.name.split("=", 1)[1]
                rows[:, j] = (chosen == level).astype(float)
    probs = predict_proba(artifact, rows)[:, target]
    best = int(np.argmax(probs))
    values = {f: grid_map[f][index[best, a]] for a, f in enumerate(features)}
    return values, float(probs[best])


def optimize_profile(artifact: ModelArtifact, schema: FeatureSchema | None = None,
                     target_class: str | OutcomeLabel = OutcomeLabel.CONTINUE,
                     min_probability: float = 0.9,
                     grids: Mapping[str, Sequence] | None = None,
                     points: int = DEFAULT_GRID_POINTS) -> OptimizationResult:
    """Coordinate ascent over per-feature grids, then constraint extraction.

    Each sweep sets every feature (in schema order) to its grid argmax of
    P(target); only strict improvements move the incumbent, so a flat
    objective terminates at the start profile. Product grids small enough
    to enumerate then get an exact scan, adopted only on strict improvement.
    After convergence every feature is swept alone and the maximal
    contiguous grid run with P(target) >= min_probability containing the
    optimum becomes one or two threshold constraints (or a level set for
    categoricals). Features whose entire grid clears the bar are
    unconstrained and omitted.
    """
    schema = _schema_of(artifact, schema)
    target = _target_index(target_class)
    grid_map = _grids_for(schema, grids, points)
    features = list(grid_map)

    values = start_profile(schema, grids, points)
    current_p = float(predict_proba(
        artifact, encode_profile(values, schema)[None, :])[0, target])
    for _ in range(MAX_SWEEPS):
        sweep_start_p = current_p
        changed = False
        for feature in features:
            grid = grid_map[feature]
            probs = predict_proba(
                artifact, _sweep_rows(values, schema, feature, grid))[:, target]
            best = int(np.argmax(probs))
            if probs[best] > current_p:
                values[feature] = grid[best]
                current_p = float(probs[best])
                changed = True
        assert current_p >= sweep_start_p, "sweep decreased the incumbent"
        if not changed:
            break

    size = 1
    for grid in grid_map.values():
        size *= len(grid)
    if size <= EXACT_SEARCH_LIMIT:
        exact_values, exact_p = _product_argmax(artifact, schema, grid_map, target)
        if exact_p > current_p:
            values = exact_values
            current_p = exact_p

    final_probs = predict_proba(artifact, encode_profile(values, schema)[None, :])[0]
    profile = Profile(values=dict(values), probabilities=final_probs)
    reachable = current_p >= min_probability
    constraints: list[ProfileConstraint] = []
    if reachable:
        for feature in features:
            grid = grid_map[feature]
            probs = predict_proba(
                artifact, _sweep_rows(values, schema, feature, grid))[:, target]
            ok = probs >= min_probability - 1e-12
            anchor = next(i for i, g in enumerate(grid) if g == values[feature])
            lo, hi = _contiguous_run(ok, anchor)
            if lo == 0 and hi == len(grid) - 1:
                continue
            if feature in _LEVELS:
                levels = tuple(grid[i] for i in range(lo, hi + 1))
                if len(levels) == 1:
                    constraints.append(ProfileConstraint(
                        feature, "=", levels[0], float(probs[lo])))
                else:
                    constraints.append(ProfileConstraint(
                        feature, "in", levels,
                        float(min(probs[lo:hi + 1]))))
                continue
            if lo == hi:
                constraints.append(ProfileConstraint(
                    feature, "=", grid[lo], float(probs[lo])))
                continue
            if lo > 0:
                constraints.append(ProfileConstraint(
                    feature, ">=", grid[lo], float(probs[lo])))
            if hi < len(grid) - 1:
                constraints.append(ProfileConstraint(
                    feature, "<=", grid[hi], float(probs[hi])))
    return OptimizationResult(
        profile=profile,
        constraints=tuple(constraints),
        target_class=OutcomeLabel(target_class).value
        if not isinstance(target_class, OutcomeLabel) else target_class.value,
        min_probability=min_probability,
        target_reachable=reachable,
    )
