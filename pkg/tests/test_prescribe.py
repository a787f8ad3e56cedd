"""Profile optimization, constraint extraction and what-if sweeps."""

import numpy as np
import pytest

import drugsurv as ds
from drugsurv.cohort import BIOLOGICS, FEASIBLE_RANGES, OutcomeLabel
from drugsurv.errors import FingerprintMismatch, UnknownFeature
from drugsurv.learn import ModelArtifact
from drugsurv.prescribe import (
    DEFAULT_GRID_POINTS,
    default_grid,
    encode_profile,
    profile_features,
    start_profile,
)
from drugsurv.preprocess import FeatureSchema, SchemaColumn
from oracles import product_grid_max, softmax_rows


def numeric_schema(d):
    cols = tuple(
        SchemaColumn(name=f"f{j}", source=f"f{j}", kind="numeric",
                     mean=0.0, sd=1.0, constant=False)
        for j in range(d))
    return FeatureSchema(mode="baseline", columns=cols)


def glm_artifact(B):
    B = np.asarray(B, dtype=float)
    return ModelArtifact(
        kind="glm",
        schema=numeric_schema(B.shape[1] - 1),
        classes=ds.CLASS_NAMES,
        params={"coefficients": B},
        training_meta={"iterations": 0, "objective": 0.0, "seconds": 0.0},
    )


def direct_target_probability(B, values, target):
    """Softmax of the linear scores, computed outside the library."""
    features = sorted(values, key=lambda f: int(f[1:]))
    xi = np.array([1.0] + [float(values[f]) for f in features])
    return float(softmax_rows((B @ xi)[None, :])[0, target])


def random_instance(rng):
    d = int(rng.integers(2, 5))
    B = rng.normal(scale=1.5, size=(6, d + 1))
    grids = {
        f"f{j}": [float(v) for v in
                  np.linspace(-2.0, 2.0, int(rng.integers(2, 11)))]
        for j in range(d)}
    target = int(rng.integers(0, 6))
    return glm_artifact(B), B, grids, target


class TestOptimizeProfile:
    def test_matches_exhaustive_product_search(self):
        rng = np.random.default_rng(33)
        for _ in range(40):
            artifact, B, grids, target = random_instance(rng)
            result = ds.optimize_profile(
                artifact, target_class=ds.CLASS_NAMES[target],
                min_probability=0.99, grids=grids)
            _, best_p = product_grid_max(
                grids, lambda vals: direct_target_probability(B, vals, target))
            achieved = direct_target_probability(B, result.profile.values, target)
            assert achieved == pytest.approx(best_p, abs=1e-12)
            assert result.profile.probabilities[target] == pytest.approx(
                best_p, abs=1e-12)

    def test_flat_predictor_stays_at_the_start_profile(self):
        artifact = glm_artifact(np.zeros((6, 4)))
        grids = {f"f{j}": [-1.0, 0.5, 2.0] for j in range(3)}
        result = ds.optimize_profile(artifact, target_class="continue",
                                     min_probability=0.9, grids=grids)
        assert result.profile.values == start_profile(artifact.schema, grids)
        assert np.allclose(result.profile.probabilities, 1 / 6, atol=1e-12)
        assert not result.target_reachable
        assert result.constraints == ()

    def test_constraints_contain_the_optimal_values(self):
        rng = np.random.default_rng(54)
        checked = 0
        for _ in range(20):
            artifact, B, grids, target = random_instance(rng)
            probe = ds.optimize_profile(
                artifact, target_class=ds.CLASS_NAMES[target],
                min_probability=1.01, grids=grids)
            bar = 0.9 * float(probe.profile.probabilities[target])
            result = ds.optimize_profile(
                artifact, target_class=ds.CLASS_NAMES[target],
                min_probability=bar, grids=grids)
            assert result.target_reachable
            for constraint in result.constraints:
                value = result.profile.values[constraint.feature]
                if constraint.relation == ">=":
                    assert value >= constraint.boundary
                elif constraint.relation == "<=":
                    assert value <= constraint.boundary
                elif constraint.relation == "=":
                    assert value == constraint.boundary
                else:
                    assert value in constraint.boundary
                assert constraint.probability >= bar - 1e-12
                checked += 1
        assert checked > 0

    def test_interior_optimum_yields_two_sided_constraints(self):
        # Two competing logits rise in opposite directions, so P(continue)
        # peaks mid-grid and a plateau around 0 clears the bar.
        B = np.zeros((6, 2))
        B[0] = [1.0, 3.0]
        B[1] = [1.0, -3.0]
        artifact = glm_artifact(B)
        grid = [float(v) for v in np.linspace(-2.0, 2.0, 9)]
        result = ds.optimize_profile(artifact, target_class="continue",
                                     min_probability=0.05, grids={"f0": grid})
        assert result.target_reachable
        assert result.profile.values["f0"] == 0.0
        by_relation = {c.relation: c.boundary for c in result.constraints}
        assert by_relation == {">=": -0.5, "<=": 0.5}

    def test_unreachable_target_keeps_profile_and_flag(self):
        artifact = glm_artifact(np.zeros((6, 3)))
        result = ds.optimize_profile(artifact, target_class="adverse_event",
                                     min_probability=0.5,
                                     grids={"f0": [0.0, 1.0], "f1": [0.0, 1.0]})
        assert not result.target_reachable
        assert result.constraints == ()
        assert result.profile.probabilities[0] == pytest.approx(1 / 6)

    def test_planted_cohort_profile_is_feasible(self, glm42):
        result = ds.optimize_profile(glm42, target_class=OutcomeLabel.CONTINUE,
                                     min_probability=0.9, points=10)
        assert result.target_class == "continue"
        for feature, value in result.profile.values.items():
            if feature in ("sex", "biologic"):
                assert value in default_grid(feature)
            elif feature in FEASIBLE_RANGES:
                lo, hi = FEASIBLE_RANGES[feature]
                assert lo <= float(value) <= hi
            else:
                assert float(value) in (0.0, 1.0)
        for constraint in result.constraints:
            if isinstance(constraint.boundary, (int, float)) \
                    and constraint.feature in FEASIBLE_RANGES:
                lo, hi = FEASIBLE_RANGES[constraint.feature]
                assert lo <= constraint.boundary <= hi

    def test_unknown_target_class_rejected(self, glm42):
        with pytest.raises(UnknownFeature):
            ds.optimize_profile(glm42, target_class="miracle_cure")

    def test_foreign_schema_rejected(self, glm42):
        with pytest.raises(FingerprintMismatch):
            ds.optimize_profile(glm42, schema=numeric_schema(3))

    def test_result_serializes_to_plain_json(self):
        rng = np.random.default_rng(5)
        artifact, _, grids, target = random_instance(rng)
        result = ds.optimize_profile(artifact,
                                     target_class=ds.CLASS_NAMES[target],
                                     min_probability=0.05, grids=grids)
        payload = result.to_json_dict()
        assert payload["target_class"] == ds.CLASS_NAMES[target]
        assert set(payload["probabilities"]) == set(ds.CLASS_NAMES)
        assert sum(payload["probabilities"].values()) == pytest.approx(1.0)
        for item in payload["constraints"]:
            assert set(item) == {"feature", "relation", "boundary", "probability"}

    def test_planted_weight_step_recovered_by_tree(self):
        records = ds.synthesize_cohort(ds.weight_step_spec())
        schema = ds.derive_schema(records, mode="baseline")
        matrix = ds.encode(records, schema)
        tree = ds.fit_model(matrix, ds.ModelConfig(kind="tree"))
        result = ds.optimize_profile(tree, target_class="continue",
                                     min_probability=0.5)
        weight = [c for c in result.constraints if c.feature == "weight_kg"]
        assert len(weight) == 1
        assert weight[0].relation == "<="
        lo, hi = FEASIBLE_RANGES["weight_kg"]
        step = (hi - lo) / (DEFAULT_GRID_POINTS - 1)
        assert abs(weight[0].boundary - 100.0) <= step + 1e-9


class TestSweepFeature:
    def test_ignored_feature_gives_a_constant_curve(self):
        B = np.zeros((6, 3))
        B[:, 1] = [0.5, -0.5, 1.0, 0.0, -1.0, 0.2]
        artifact = glm_artifact(B)
        base = {"f0": 1.0, "f1": 0.0}
        grid, probs = ds.sweep_feature(artifact, None, base, "f1",
                                       grid=[-2.0, 0.0, 2.0])
        assert np.all(probs == probs[0])

    def test_monotone_logit_gives_monotone_curve(self):
        B = np.zeros((6, 2))
        B[5, 1] = 2.0
        artifact = glm_artifact(B)
        grid = [float(v) for v in np.linspace(-3.0, 3.0, 25)]
        values, probs = ds.sweep_feature(artifact, None, {"f0": 0.0}, "f0",
                                         grid=grid)
        assert values == grid
        assert np.all(np.diff(probs[:, 5]) > 0)
        for value, row in zip(values, probs):
            scores = (B @ np.array([1.0, value]))[None, :]
            assert np.allclose(row, softmax_rows(scores)[0], atol=1e-12)

    def test_biologic_sweep_is_one_point_per_level(self, glm42):
        base = start_profile(glm42.schema)
        grid, probs = ds.sweep_feature(glm42, None, base, "biologic")
        assert grid == list(BIOLOGICS)
        assert probs.shape == (4, 6)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_unknown_feature_rejected(self, glm42):
        with pytest.raises(UnknownFeature):
            ds.sweep_feature(glm42, None, start_profile(glm42.schema), "shoe_size")

    def test_default_numeric_grid_has_default_points(self, glm42):
        base = start_profile(glm42.schema)
        grid, probs = ds.sweep_feature(glm42, None, base, "weight_kg")
        assert len(grid) == DEFAULT_GRID_POINTS
        assert probs.shape == (DEFAULT_GRID_POINTS, 6)


class TestGridsAndProfiles:
    def test_default_grids_by_feature_kind(self):
        assert default_grid("sex") == ["male", "female"]
        assert default_grid("biologic") == list(BIOLOGICS)
        assert default_grid("previous_mtx") == [0.0, 1.0]
        assert default_grid("comorbidity_count") == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
        weight = default_grid("weight_kg")
        lo, hi = FEASIBLE_RANGES["weight_kg"]
        assert len(weight) == DEFAULT_GRID_POINTS
        assert weight[0] == lo and weight[-1] == hi

    def test_profile_features_deduplicate_sources(self, glm42):
        features = profile_features(glm42.schema)
        assert len(features) == len(set(features))
        assert "biologic" in features
        assert "treatment_length_months" in features

    def test_start_profile_snaps_means_onto_the_grid(self):
        cols = (
            SchemaColumn(name="f0", source="f0", kind="numeric",
                         mean=0.4, sd=1.0, constant=False),
        )
        schema = FeatureSchema(mode="baseline", columns=cols)
        values = start_profile(schema, {"f0": [0.0, 1.0]})
        assert values == {"f0": 0.0}

    def test_encode_profile_standardizes_and_onehots(self):
        cols = (
            SchemaColumn(name="age_years", source="age_years", kind="numeric",
                         mean=40.0, sd=10.0, constant=False),
            SchemaColumn(name="sex=male", source="sex", kind="onehot",
                         mean=0.5, sd=1.0, constant=False),
            SchemaColumn(name="sex=female", source="sex", kind="onehot",
                         mean=0.5, sd=1.0, constant=False),
        )
        schema = FeatureSchema(mode="baseline", columns=cols)
        row = encode_profile({"age_years": 50.0, "sex": "female"}, schema)
        assert row.tolist() == [1.0, 0.0, 1.0]

    def test_encode_profile_requires_every_feature(self):
        schema = numeric_schema(2)
        with pytest.raises(UnknownFeature):
            encode_profile({"f0": 1.0}, schema)
