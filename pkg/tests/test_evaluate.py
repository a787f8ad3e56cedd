"""Cross-validation, confusion/accuracy, OvR ROC/AUC and agreement metrics."""

import dataclasses
import math

import numpy as np
import pytest

import drugsurv as ds
from drugsurv.cohort import OutcomeLabel, RocGroup
from drugsurv.errors import (
    EmptyInput,
    InvalidConfig,
    LengthMismatch,
    OneClassOnly,
    TooFewRows,
    ZeroVariance,
)
from drugsurv.evaluate import auc_table_csv, bland_altman_svg, roc_svg
from oracles import PUBLISHED_CONFUSION, pair_count_auc


def matrix_to_label_pairs(counts):
    """Expand a predicted-by-true count matrix into label vectors."""
    true_labels, predicted_labels = [], []
    for p in range(6):
        for t in range(6):
            true_labels.extend([t] * counts[p, t])
            predicted_labels.extend([p] * counts[p, t])
    return true_labels, predicted_labels


class TestKfoldSplit:
    def test_cohort_sized_split_is_balanced(self):
        folds = ds.kfold_split(681, 5, seed=3)
        assert sorted(len(f) for f in folds) == [136, 136, 136, 136, 137]

    def test_five_rows_five_singletons(self):
        folds = ds.kfold_split(5, 5, seed=0)
        assert [len(f) for f in folds] == [1, 1, 1, 1, 1]

    def test_disjoint_exhaustive_balanced(self):
        for n, k, seed in ((10, 3, 0), (137, 5, 1), (1000, 7, 9)):
            folds = ds.kfold_split(n, k, seed)
            merged = np.concatenate(folds)
            assert len(merged) == n
            assert set(merged.tolist()) == set(range(n))
            sizes = [len(f) for f in folds]
            assert max(sizes) - min(sizes) <= 1

    def test_deterministic_and_seed_sensitive(self):
        a = ds.kfold_split(50, 5, seed=4)
        b = ds.kfold_split(50, 5, seed=4)
        c = ds.kfold_split(50, 5, seed=5)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
        assert any(not np.array_equal(x, y) for x, y in zip(a, c))

    def test_too_few_rows(self):
        with pytest.raises(TooFewRows):
            ds.kfold_split(4, 5)
        with pytest.raises(TooFewRows):
            ds.kfold_split(10, 0)


class TestConfusionAndAccuracy:
    def test_published_registry_matrix_accuracy(self):
        true_labels, predicted_labels = matrix_to_label_pairs(PUBLISHED_CONFUSION)
        matrix, accuracy = ds.confusion_and_accuracy(true_labels, predicted_labels)
        assert np.array_equal(matrix.counts, PUBLISHED_CONFUSION)
        assert matrix.total == 195
        assert accuracy == pytest.approx(159 / 195, abs=1e-12)
        assert round(100 * accuracy, 2) == 81.54

    def test_perfect_predictions(self):
        y = [0, 1, 2, 3, 4, 5, 5, 5]
        matrix, accuracy = ds.confusion_and_accuracy(y, y)
        assert accuracy == 1.0
        assert np.array_equal(matrix.counts, np.diag(np.bincount(y, minlength=6)))

    def test_per_class_binary_accuracy_matches_hand_count(self):
        true_labels = [0, 0, 1, 1, 2, 2]
        predicted_labels = [0, 1, 1, 2, 2, 0]
        matrix, _ = ds.confusion_and_accuracy(true_labels, predicted_labels)
        for k in range(3):
            tp = sum(1 for t, p in zip(true_labels, predicted_labels)
                     if t == k and p == k)
            tn = sum(1 for t, p in zip(true_labels, predicted_labels)
                     if t != k and p != k)
            assert matrix.class_accuracy(k) == pytest.approx((tp + tn) / 6)

    def test_orientation_is_predicted_by_true(self):
        matrix, _ = ds.confusion_and_accuracy([1], [3])
        assert matrix.counts[3, 1] == 1
        assert matrix.counts[1, 3] == 0

    def test_csv_shape(self):
        matrix, _ = ds.confusion_and_accuracy([0, 5], [5, 5])
        lines = matrix.to_csv().splitlines()
        assert lines[0].startswith("predicted\\true,adverse_event,")
        assert len(lines) == 7
        assert lines[-1].split(",")[0] == "continue"

    def test_error_paths(self):
        with pytest.raises(LengthMismatch):
            ds.confusion_and_accuracy([0, 1], [0])
        with pytest.raises(EmptyInput):
            ds.confusion_and_accuracy([], [])
        with pytest.raises(LengthMismatch):
            ds.ConfusionMatrix(np.zeros((5, 5), dtype=int))


class TestCrossValidate:
    def test_majority_predictor_tracks_label_share(self, cohort42):
        rng = np.random.default_rng(0)
        records = [
            dataclasses.replace(
                rec,
                outcome=OutcomeLabel.CONTINUE if rng.random() < 0.8
                else OutcomeLabel.LACK_OF_EFFICACY)
            for rec in cohort42[:300]
        ]
        config = ds.ModelConfig(kind="tree", tree_max_depth=0)
        report = ds.cross_validate(records, config, k=5, seed=0)
        share = np.mean([rec.outcome is OutcomeLabel.CONTINUE for rec in records])
        for accuracy in report.fold_accuracies:
            assert accuracy == pytest.approx(share, abs=0.07)
        assert report.sd_accuracy < 0.05
        assert min(report.fold_accuracies) <= report.mean_accuracy <= max(report.fold_accuracies)

    def test_leave_one_out_on_six_rows(self, cohort42):
        records = cohort42[:6]
        config = ds.ModelConfig(kind="tree", tree_max_depth=0)
        report = ds.cross_validate(records, config, k=6, seed=0)
        assert len(report.fold_accuracies) == 6
        assert set(report.fold_accuracies) <= {0.0, 1.0}
        assert report.confusion.total == 6
        assert report.micro_accuracy == pytest.approx(report.mean_accuracy)

    def test_micro_accuracy_is_pooled_trace_over_total(self, cohort42):
        config = ds.ModelConfig(kind="tree", tree_max_depth=3)
        report = ds.cross_validate(cohort42[:200], config, k=5, seed=1)
        counts = report.confusion.counts
        assert report.micro_accuracy == np.trace(counts) / counts.sum()
        assert report.confusion.total == 200
        assert report.pooled_labels.shape == (200,)
        assert report.pooled_probabilities.shape == (200, 6)
        assert report.seconds >= 0.0

    def test_held_out_labels_cannot_leak_into_the_fit(self, cohort42):
        records = cohort42[:100]
        config = ds.ModelConfig(kind="glm")
        clean = ds.cross_validate(records, config, k=5, seed=0,
                                  collect_artifacts=True)
        poisoned = list(records)
        for j in ds.kfold_split(100, 5, seed=0)[0]:
            rec = poisoned[j]
            flip = (OutcomeLabel.CONTINUE if rec.outcome is not OutcomeLabel.CONTINUE
                    else OutcomeLabel.OTHER)
            poisoned[j] = dataclasses.replace(rec, outcome=flip)
        dirty = ds.cross_validate(poisoned, config, k=5, seed=0,
                                  collect_artifacts=True)
        assert np.array_equal(
            np.asarray(clean.artifacts[0].params["coefficients"]),
            np.asarray(dirty.artifacts[0].params["coefficients"]))

    def test_fold_errors_carry_the_fold_index(self, cohort42):
        records = [dataclasses.replace(rec, outcome=OutcomeLabel.CONTINUE)
                   for rec in cohort42[:40]]
        with pytest.raises(Exception, match="fold 0"):
            ds.cross_validate(records, ds.ModelConfig(kind="logreg"), k=5, seed=0)

    def test_missing_outcome_rejected(self, cohort42):
        records = list(cohort42[:20])
        records[3] = dataclasses.replace(records[3], outcome=None)
        with pytest.raises(Exception):
            ds.cross_validate(records, ds.ModelConfig(kind="tree"), k=5, seed=0)

    def test_report_csv_shape(self, cohort42):
        config = ds.ModelConfig(kind="tree", tree_max_depth=2)
        report = ds.cross_validate(cohort42[:100], config, k=5, seed=0)
        lines = report.to_csv().splitlines()
        assert lines[0] == "model,accuracy,standard_deviation,runtime_s"
        cells = lines[1].split(",")
        assert cells[0] == "tree"
        assert float(cells[1]) == pytest.approx(report.mean_accuracy)
        assert float(cells[2]) == pytest.approx(report.sd_accuracy)
        assert cells[3] == f"{report.seconds:.3f}"


class TestCrossValidateLength:
    def test_pools_held_out_pairs(self, cohort42):
        report, seconds = ds.cross_validate_length(cohort42[:150], k=5, seed=0)
        assert len(report.differences) == 150
        assert report.mae > 0.0
        assert seconds >= 0.0

    def test_wrong_kind_rejected(self, cohort42):
        with pytest.raises(InvalidConfig):
            ds.cross_validate_length(cohort42[:20], ds.ModelConfig(kind="glm"))


def simplex_scores(positive_scores, group_column):
    """Score matrix whose summed group probability equals the given scores."""
    scores = np.asarray(positive_scores, dtype=float)
    matrix = np.zeros((len(scores), 6))
    matrix[:, group_column] = scores
    matrix[:, 5] = 1.0 - scores
    return matrix


class TestRocAuc:
    def test_hand_case_three_quarters(self):
        labels = [0, 0, 5, 5]
        scores = simplex_scores([0.9, 0.4, 0.5, 0.1], group_column=0)
        curve = ds.roc_auc_ovr(labels, scores, RocGroup.ADVERSE_EVENT)
        assert curve.auc == pytest.approx(0.75, abs=1e-12)

    def test_perfect_separation(self):
        labels = [2, 2, 5, 5, 5]
        scores = simplex_scores([0.9, 0.8, 0.3, 0.2, 0.1], group_column=2)
        curve = ds.roc_auc_ovr(labels, scores, RocGroup.LACK_OF_EFFICACY)
        assert curve.auc == 1.0

    def test_trapezoid_equals_pair_count_with_ties(self):
        rng = np.random.default_rng(14)
        for n in (20, 80, 300):
            labels = rng.integers(0, 6, size=n)
            raw = rng.dirichlet(np.ones(6), size=n)
            quantized = np.round(raw, 1)
            quantized /= quantized.sum(axis=1, keepdims=True)
            for group in RocGroup:
                positive_idx = [
                    i for i, name in enumerate(ds.CLASS_NAMES)
                    if OutcomeLabel(name) in
                    ds.cohort.ROC_GROUP_POSITIVES[group]]
                mask = np.isin(labels, positive_idx)
                if mask.all() or not mask.any():
                    continue
                curve = ds.roc_auc_ovr(labels, quantized, group)
                expected = pair_count_auc(quantized[:, positive_idx].sum(axis=1),
                                          mask)
                assert abs(curve.auc - expected) < 1e-12

    def test_curve_is_monotone_staircase(self):
        rng = np.random.default_rng(2)
        labels = rng.integers(0, 6, size=50)
        scores = rng.dirichlet(np.ones(6), size=50)
        curve = ds.roc_auc_ovr(labels, scores, RocGroup.ANY_REASON)
        assert tuple(curve.points[0]) == (0.0, 0.0)
        assert tuple(curve.points[-1]) == (1.0, 1.0)
        assert np.all(np.diff(curve.points[:, 0]) >= 0)
        assert np.all(np.diff(curve.points[:, 1]) >= 0)

    def test_single_class_rejected(self):
        scores = simplex_scores([0.4, 0.6], group_column=0)
        with pytest.raises(OneClassOnly):
            ds.roc_auc_ovr([5, 5], scores, RocGroup.ADVERSE_EVENT)

    def test_four_groups_in_declared_order(self):
        rng = np.random.default_rng(6)
        labels = rng.integers(0, 6, size=60)
        scores = rng.dirichlet(np.ones(6), size=60)
        curves = ds.roc_curves(labels, scores)
        assert [c.group for c in curves] == list(RocGroup)
        table = auc_table_csv(curves).splitlines()
        assert table[0] == "group,auc"
        assert len(table) == 5
        assert table[1].startswith("any_reason,")

    def test_shape_errors(self):
        with pytest.raises(LengthMismatch):
            ds.roc_auc_ovr([0, 5], np.zeros((2, 4)), RocGroup.ANY_REASON)
        with pytest.raises(LengthMismatch):
            ds.roc_auc_ovr([0, 5, 5], simplex_scores([0.2, 0.8], 0),
                           RocGroup.ANY_REASON)


class TestRegressionMetrics:
    def test_hand_case(self):
        mae, r = ds.regression_metrics([10, 20, 30], [12, 18, 33])
        assert mae == pytest.approx(7 / 3, abs=1e-12)
        assert -1.0 <= r <= 1.0

    def test_affine_predictions_have_unit_correlation(self):
        actual = [1.0, 2.0, 5.0, 9.0]
        predicted = [2 * a + 3 for a in actual]
        _, r = ds.regression_metrics(actual, predicted)
        assert r == pytest.approx(1.0, abs=1e-12)

    def test_identity_predictions(self):
        mae, r = ds.regression_metrics([1.0, 4.0, 6.0], [1.0, 4.0, 6.0])
        assert mae == 0.0
        assert r == pytest.approx(1.0, abs=1e-12)

    def test_affine_invariance_of_r(self):
        rng = np.random.default_rng(11)
        actual = rng.normal(size=30)
        predicted = actual + rng.normal(scale=0.5, size=30)
        _, r = ds.regression_metrics(actual, predicted)
        _, r_scaled = ds.regression_metrics(3.0 * actual + 7.0, predicted)
        assert r_scaled == pytest.approx(r, abs=1e-12)

    def test_error_paths(self):
        with pytest.raises(ZeroVariance):
            ds.regression_metrics([1.0, 2.0], [5.0, 5.0])
        with pytest.raises(LengthMismatch):
            ds.regression_metrics([1.0], [1.0, 2.0])
        with pytest.raises(TooFewRows):
            ds.regression_metrics([1.0], [1.0])


class TestBlandAltman:
    def test_identical_vectors(self):
        report = ds.bland_altman([3.0, 7.0, 9.0], [3.0, 7.0, 9.0])
        assert report.bias == 0.0
        assert report.lower_limit == 0.0
        assert report.upper_limit == 0.0
        assert report.mae == 0.0

    def test_alternating_unit_differences(self):
        actual = [1.0, -1.0, 1.0, -1.0]
        report = ds.bland_altman(actual, [0.0, 0.0, 0.0, 0.0])
        assert report.bias == 0.0
        assert report.sd_differences == pytest.approx(math.sqrt(4 / 3), abs=1e-12)
        assert report.upper_limit == pytest.approx(2.2632, abs=5e-5)
        assert report.lower_limit == pytest.approx(-2.2632, abs=5e-5)

    def test_gaussian_coverage_near_ninety_five_percent(self):
        rng = np.random.default_rng(20)
        actual = rng.normal(50.0, 10.0, size=10_000)
        predicted = actual + rng.normal(0.5, 2.0, size=10_000)
        report = ds.bland_altman(actual, predicted)
        inside = np.mean((report.differences >= report.lower_limit)
                         & (report.differences <= report.upper_limit))
        assert 0.93 <= inside <= 0.97

    def test_translation_shifts_bias(self):
        rng = np.random.default_rng(21)
        actual = rng.normal(size=40)
        predicted = actual + rng.normal(scale=0.2, size=40)
        base = ds.bland_altman(actual, predicted)
        shifted = ds.bland_altman(actual, predicted + 2.5)
        assert shifted.bias == pytest.approx(base.bias - 2.5, abs=1e-12)
        assert shifted.sd_differences == pytest.approx(base.sd_differences, abs=1e-12)

    def test_constant_prediction_leaves_r_undefined(self):
        report = ds.bland_altman([1.0, 2.0, 3.0], [2.0, 2.0, 2.0])
        assert report.pearson_r is None
        assert "pearson_r,\n" in report.to_csv()

    def test_csv_lists_all_summary_rows(self):
        report = ds.bland_altman([1.0, 2.0, 4.0], [1.5, 1.5, 3.0])
        lines = report.to_csv().splitlines()
        assert lines[0] == "statistic,value"
        names = [line.split(",")[0] for line in lines[1:]]
        assert names == ["bias", "sd_differences", "lower_limit",
                         "upper_limit", "mae", "pearson_r"]

    def test_error_paths(self):
        with pytest.raises(EmptyInput):
            ds.bland_altman([1.0], [1.0])
        with pytest.raises(LengthMismatch):
            ds.bland_altman([1.0, 2.0], [1.0])


class TestSvgExports:
    def test_roc_svg_draws_all_curves(self):
        rng = np.random.default_rng(9)
        labels = rng.integers(0, 6, size=60)
        scores = rng.dirichlet(np.ones(6), size=60)
        curves = ds.roc_curves(labels, scores)
        svg = roc_svg(curves)
        assert svg.startswith("<svg ")
        assert svg.count("<polyline") == 4
        for curve in curves:
            assert f"{curve.group.value} AUC={curve.auc:.3f}" in svg
        assert svg == roc_svg(curves)

    def test_bland_altman_svg_draws_points_and_limits(self):
        rng = np.random.default_rng(10)
        actual = rng.normal(30.0, 8.0, size=25)
        predicted = actual + rng.normal(size=25)
        report = ds.bland_altman(actual, predicted)
        svg = bland_altman_svg(report)
        assert svg.count("<circle") == 25
        assert f"bias {report.bias:.2f}" in svg
        assert f"lower {report.lower_limit:.2f}" in svg
        assert f"upper {report.upper_limit:.2f}" in svg
