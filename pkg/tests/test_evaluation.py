"""Splitting, confusion matrices and report metrics."""

import json

import numpy as np
import pytest

from asgir.errors import ArgumentError
from asgir.evaluation import (
    class_report,
    confusion,
    report_as_dict,
    report_as_text,
    run_ablation,
    split,
)
from asgir.labels import LabelRegistry

REG2 = LabelRegistry(["alpha", "beta"])


def brute_force_report(counts: np.ndarray):
    """Per-class P/R/F1 recomputed from raw TP/FP/FN tallies."""
    n = counts.shape[0]
    precision, recall, f1 = np.zeros(n), np.zeros(n), np.zeros(n)
    for c in range(n):
        tp = counts[c, c]
        fp = counts[:, c].sum() - tp
        fn = counts[c, :].sum() - tp
        precision[c] = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall[c] = tp / (tp + fn) if tp + fn > 0 else 0.0
        if precision[c] + recall[c] > 0:
            f1[c] = 2 * precision[c] * recall[c] / (precision[c] + recall[c])
    accuracy = np.trace(counts) / counts.sum() if counts.sum() else 0.0
    return precision, recall, f1, accuracy


class TestSplit:
    def test_ten_segments_give_8_2(self):
        ids = [0] * 10 + [1] * 10
        train, test = split(ids, 0.8, seed=0)
        assert len(train) == 16 and len(test) == 4
        for c in (0, 1):
            assert sum(1 for i in train if ids[i] == c) == 8
            assert sum(1 for i in test if ids[i] == c) == 2

    def test_same_seed_same_split(self):
        rng = np.random.default_rng(0)
        ids = rng.integers(0, 5, size=200)
        assert split(ids, 0.8, seed=3) == split(ids, 0.8, seed=3)
        assert split(ids, 0.8, seed=3) != split(ids, 0.8, seed=4)

    def test_4855_segments_split_within_flooring(self):
        # 51 classes with varying counts totalling 4855: the 80/20 split
        # yields 3884/971 up to one flooring unit per class
        rng = np.random.default_rng(42)
        counts = rng.multinomial(4855 - 51 * 10, np.full(51, 1 / 51)) + 10
        assert counts.sum() == 4855
        ids = np.repeat(np.arange(51), counts)
        train, test = split(ids, 0.8, seed=0)
        assert len(train) + len(test) == 4855
        assert 3884 - 51 <= len(train) <= 3884
        assert 971 <= len(test) <= 971 + 51

    def test_singleton_class_warned_into_train(self, caplog):
        import logging

        with caplog.at_level(logging.WARNING):
            train, test = split([0, 1, 1, 1, 1], 0.8, seed=0)
        assert 0 in train
        assert all(i != 0 for i in test)
        assert any("single segment" in r.message for r in caplog.records)

    def test_every_class_on_both_sides(self):
        ids = np.repeat(np.arange(7), 5)
        train, test = split(ids, 0.8, seed=1)
        for c in range(7):
            assert any(ids[i] == c for i in train)
            assert any(ids[i] == c for i in test)

    def test_bad_ratio_rejected(self):
        with pytest.raises(ArgumentError):
            split([0, 1], 1.0, seed=0)
        with pytest.raises(ArgumentError):
            split([], 0.8, seed=0)


class TestConfusion:
    def test_perfect_predictions_diagonal(self):
        cm = confusion([0, 1, 2, 1], [0, 1, 2, 1], 3)
        assert np.array_equal(cm.counts, np.diag([1, 2, 1]))

    def test_all_predicted_class_zero(self):
        cm = confusion([0, 1, 2], [0, 0, 0], 3)
        assert cm.counts[:, 0].sum() == 3
        assert cm.counts[:, 1:].sum() == 0

    def test_hand_case(self):
        cm = confusion([0, 0, 1, 1], [0, 1, 1, 1], 2)
        assert np.array_equal(cm.counts, [[1, 1], [0, 2]])

    def test_length_mismatch(self):
        with pytest.raises(ArgumentError):
            confusion([0, 1], [0], 2)


class TestClassReport:
    def test_hand_case_metrics(self):
        cm = confusion([0, 0, 1, 1], [0, 1, 1, 1], 2)
        report = class_report(cm, REG2)
        assert report.precision[0] == pytest.approx(1.0)
        assert report.recall[0] == pytest.approx(0.5)
        assert report.f1[0] == pytest.approx(2 / 3)
        assert report.precision[1] == pytest.approx(2 / 3)
        assert report.recall[1] == pytest.approx(1.0)
        assert report.f1[1] == pytest.approx(0.8)
        assert report.accuracy == pytest.approx(0.75)
        assert list(report.support) == [2, 2]

    def test_diagonal_matrix_all_ones(self):
        from asgir.evaluation import ConfusionMatrix

        report = class_report(ConfusionMatrix(counts=np.diag([5, 3, 2])), LabelRegistry(["a", "b", "c"]))
        for value in (
            report.macro_f1,
            report.macro_precision,
            report.macro_recall,
            report.accuracy,
            report.median_f1,
            report.median_precision,
            report.median_recall,
        ):
            assert value == pytest.approx(1.0)

    def test_matches_brute_force_on_random_matrices(self):
        from asgir.evaluation import ConfusionMatrix

        rng = np.random.default_rng(7)
        for _ in range(200):
            n = rng.integers(2, 8)
            counts = rng.integers(0, 20, size=(n, n))
            if counts.sum() == 0:
                counts[0, 0] = 1
            report = class_report(
                ConfusionMatrix(counts=counts), LabelRegistry([f"c{i}" for i in range(n)])
            )
            precision, recall, f1, accuracy = brute_force_report(counts)
            np.testing.assert_array_equal(report.precision, precision)
            np.testing.assert_array_equal(report.recall, recall)
            np.testing.assert_array_equal(report.f1, f1)
            assert report.accuracy == accuracy
            assert report.macro_f1 == f1.mean()
            assert report.median_precision == np.median(precision)
            assert np.all((report.f1 >= 0) & (report.f1 <= 1))

    def test_report_dict_schema(self):
        cm = confusion([0, 0, 1, 1], [0, 1, 1, 1], 2)
        payload = report_as_dict(class_report(cm, REG2))
        assert set(payload) == {"classes", "macro", "medians", "accuracy"}
        assert payload["classes"][0] == {
            "name": "alpha",
            "precision": 1.0,
            "recall": 0.5,
            "f1": round(2 / 3, 6),
            "support": 2,
        }
        json.dumps(payload)  # serializable

    def test_report_text_table_shape(self):
        cm = confusion([0, 0, 1, 1], [0, 1, 1, 1], 2)
        text = report_as_text(class_report(cm, REG2))
        lines = text.splitlines()
        assert lines[0].split() == ["Class", "Precision", "Recall", "F1-Score", "Support"]
        assert lines[1].startswith("alpha")
        assert "accuracy: 0.7500" in text


class TestRunAblation:
    def _embeddings(self):
        rng = np.random.default_rng(5)
        train_x = np.vstack([rng.normal([0, 0], 0.5, (20, 2)), rng.normal([6, 6], 0.5, (20, 2))])
        train_y = np.repeat([0, 1], 20)
        test_x = np.vstack([rng.normal([0, 0], 0.5, (8, 2)), rng.normal([6, 6], 0.5, (8, 2))])
        test_y = np.repeat([0, 1], 8)
        return train_x, train_y, test_x, test_y

    def test_rows_per_configuration(self):
        from asgir.regions import RegionIndex

        train_x, train_y, test_x, test_y = self._embeddings()
        idx = RegionIndex(regions={"r": frozenset({0, 1})})
        rows = run_ablation(
            train_x, train_y, test_x, test_y, ["r"] * len(test_y), REG2, idx,
            heads=["svm", "gmm"], masking_options=[False, True], seed=0,
        )
        assert [(r.head, r.masked) for r in rows] == [
            ("svm", False), ("svm", True), ("gmm", False), ("gmm", True),
        ]
        for row in rows:
            assert row.error is None
            for metric in (row.macro_f1, row.macro_precision, row.macro_recall, row.accuracy):
                assert 0.0 <= metric <= 1.0

    def test_single_head_no_masking_one_row(self):
        train_x, train_y, test_x, test_y = self._embeddings()
        rows = run_ablation(
            train_x, train_y, test_x, test_y, [None] * len(test_y), REG2, None,
            heads=["svm"], masking_options=[False], seed=0,
        )
        assert len(rows) == 1

    def test_failed_head_reported_others_run(self):
        train_x, train_y, test_x, test_y = self._embeddings()
        rows = run_ablation(
            train_x, train_y, test_x, test_y, [None] * len(test_y), REG2, None,
            heads=["bogus", "svm"], masking_options=[False], seed=0,
        )
        assert rows[0].error is not None
        assert rows[1].error is None
