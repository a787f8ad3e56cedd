"""Schema derivation, encoding and the PCA screen."""

import numpy as np
import pytest

import drugsurv as ds
from drugsurv.errors import DegenerateCovariance, EmptyCohort, SchemaMismatch
from oracles import jacobi_eigh
from test_cohort import record


@pytest.fixture(scope="module")
def schema42(cohort42):
    return ds.derive_schema(cohort42, mode="baseline")


class TestDeriveSchema:
    def test_baseline_has_25_columns(self, schema42):
        assert len(schema42.columns) == 25
        sources = {c.source for c in schema42.columns}
        assert "treatment_length_months" not in sources

    def test_retrospective_has_26_columns(self, cohort42):
        schema = ds.derive_schema(cohort42, mode="retrospective")
        assert len(schema.columns) == 26
        assert any(c.source == "treatment_length_months" for c in schema.columns)

    def test_optional_features_get_missing_indicators(self, schema42):
        names = [c.name for c in schema42.columns]
        for stem in ("height_cm", "weight_kg", "comorbidity_count",
                     "age_at_diagnosis", "concurrent_mtx", "baseline_dlqi",
                     "baseline_pasi"):
            assert f"{stem}__missing" in names

    def test_categoricals_expand_to_levels(self, schema42):
        names = [c.name for c in schema42.columns]
        assert "sex=male" in names and "sex=female" in names
        assert sum(n.startswith("biologic=") for n in names) == 4

    def test_stats_use_observed_values_only(self):
        records = [record(weight_kg=70.0), record(weight_kg=90.0),
                   record(weight_kg=None)]
        schema = ds.derive_schema(records, mode="baseline")
        col = next(c for c in schema.columns if c.name == "weight_kg")
        assert col.mean == 80.0
        assert col.sd == pytest.approx(np.std([70.0, 90.0], ddof=1))

    def test_constant_column_flagged_with_unit_sd(self):
        records = [record(age_years=50.0), record(age_years=50.0)]
        schema = ds.derive_schema(records, mode="baseline")
        col = next(c for c in schema.columns if c.name == "age_years")
        assert col.constant and col.sd == 1.0

    def test_empty_cohort_rejected(self):
        with pytest.raises(EmptyCohort):
            ds.derive_schema([], mode="baseline")

    def test_bad_mode_rejected(self, cohort42):
        with pytest.raises(SchemaMismatch):
            ds.derive_schema(cohort42, mode="prospective")

    def test_fingerprint_ignores_statistics(self, cohort42, schema42):
        other = ds.derive_schema(cohort42[:300], mode="baseline")
        assert other.fingerprint == schema42.fingerprint

    def test_fingerprint_differs_by_mode(self, cohort42, schema42):
        retro = ds.derive_schema(cohort42, mode="retrospective")
        assert retro.fingerprint != schema42.fingerprint

    def test_schema_dict_round_trip(self, schema42):
        clone = ds.FeatureSchema.from_dict(schema42.to_dict())
        assert clone == schema42
        assert clone.fingerprint == schema42.fingerprint


class TestEncode:
    def test_standardizes_numerics(self):
        records = [record(age_years=40.0), record(age_years=50.0),
                   record(age_years=60.0)]
        schema = ds.derive_schema(records, mode="baseline")
        matrix = ds.encode(records, schema)
        j = [c.name for c in schema.columns].index("age_years")
        expected = (np.array([40.0, 50.0, 60.0]) - 50.0) / 10.0
        assert np.allclose(matrix.X[:, j], expected)

    def test_missing_imputes_zero_and_sets_indicator(self):
        records = [record(weight_kg=70.0), record(weight_kg=90.0),
                   record(weight_kg=None)]
        schema = ds.derive_schema(records, mode="baseline")
        matrix = ds.encode(records, schema)
        names = [c.name for c in schema.columns]
        j, m = names.index("weight_kg"), names.index("weight_kg__missing")
        assert matrix.X[2, j] == 0.0
        assert list(matrix.X[:, m]) == [0.0, 0.0, 1.0]

    def test_onehot_rows_are_exclusive(self, cohort42, schema42, base_matrix):
        names = [c.name for c in schema42.columns]
        cols = [names.index(f"biologic={b}") for b in
                ("adalimumab", "etanercept", "infliximab", "ustekinumab")]
        assert np.all(base_matrix.X[:, cols].sum(axis=1) == 1.0)

    def test_unknown_level_encodes_zeroes_with_warning(self):
        full = ds.derive_schema([record(), record(age_years=30.0)], mode="baseline")
        schema = ds.FeatureSchema(
            mode=full.mode,
            columns=tuple(c for c in full.columns if c.name != "biologic=infliximab"))
        with pytest.warns(UserWarning, match="infliximab"):
            matrix = ds.encode([record(biologic="infliximab")], schema)
        names = [c.name for c in schema.columns]
        hot = [j for j, n in enumerate(names) if n.startswith("biologic=")]
        assert np.all(matrix.X[0, hot] == 0.0)

    def test_labels_and_lengths_carried(self, base_matrix, labels42, cohort42):
        assert np.array_equal(base_matrix.labels, labels42)
        assert np.allclose(
            base_matrix.lengths,
            [r.treatment_length_months for r in cohort42])

    def test_boolean_sources_standardized(self, schema42):
        col = next(c for c in schema42.columns if c.name == "previous_biologic")
        assert col.kind == "numeric"


class TestPcaScreen:
    def test_matches_rotation_oracle(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(120, 8)) @ rng.normal(size=(8, 8))
        report = ds.pca_screen(X, variance_threshold=0.95)
        S = np.cov(X, rowvar=False, ddof=1)
        oracle_vals, _ = jacobi_eigh(S)
        assert np.allclose(report.eigenvalues, oracle_vals, atol=1e-9)
        cumulative = np.cumsum(oracle_vals) / oracle_vals.sum()
        oracle_retained = int(np.searchsorted(cumulative, 0.95 - 1e-12) + 1)
        assert report.n_retained == oracle_retained

    def test_full_threshold_retains_everything(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(40, 5))
        report = ds.pca_screen(X, variance_threshold=1.0)
        assert report.n_retained == 5
        assert report.dropped_features == ()

    def test_two_dimensional_hand_case(self):
        t = np.linspace(-1, 1, 50)
        X = np.column_stack([t, t])
        report = ds.pca_screen(X, variance_threshold=0.95)
        assert report.n_retained == 1
        assert report.eigenvalues[1] == pytest.approx(0.0, abs=1e-12)

    def test_low_loading_feature_dropped(self):
        rng = np.random.default_rng(5)
        strong = rng.normal(size=(200, 3))
        weak = rng.normal(scale=1e-4, size=(200, 1))
        X = np.hstack([strong, weak])
        report = ds.pca_screen(X, variance_threshold=0.95, loading_floor=0.1)
        assert report.dropped_features == ("x3",)

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(DegenerateCovariance):
            ds.pca_screen(np.zeros((10, 4)))
        with pytest.raises(DegenerateCovariance):
            ds.pca_screen(np.ones((1, 4)))

    def test_report_csv_has_row_per_feature(self):
        rng = np.random.default_rng(6)
        report = ds.pca_screen(rng.normal(size=(30, 4)))
        lines = report.to_csv().strip().splitlines()
        assert len(lines) == 1 + 4

    def test_explained_ratios_sum_to_one(self, base_matrix):
        report = ds.pca_screen(base_matrix)
        assert report.explained_ratios.sum() == pytest.approx(1.0)
        assert np.all(np.diff(report.eigenvalues) <= 1e-12)
