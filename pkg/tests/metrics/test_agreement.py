"""Tests for agreement statistics, aggregation and report tables."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from nerif.core.models import ProficiencyLevel
from nerif.core.tasks import get_task
from nerif.errors import DegenerateAgreement, EmptyInput, InsufficientItems
from nerif.gateway.models import OracleScript
from nerif.gateway.oracle import noise_from_confusion, oracle_assessments
from nerif.metrics.agreement import (
    MAXIMAL_MISS,
    aggregate,
    confusion,
    kappa_band,
    per_class_precision,
    quadratic_weighted_kappa,
    report,
    sample_sd,
    score_pairs,
    validation_row,
)
from nerif.metrics.models import ConfusionMatrix, KappaBand, MetricsReport
from nerif.metrics import tables
from nerif.metrics.tables import confusion_table, fmt, render_text, validation_table

B, D, R = ProficiencyLevel.BEGINNING, ProficiencyLevel.DEVELOPING, ProficiencyLevel.PROFICIENT
LEVELS = [B, D, R]

J2_1 = ConfusionMatrix.from_array([[34, 16, 0], [22, 28, 0], [12, 32, 6]])
J6_1 = ConfusionMatrix.from_array([[31, 19, 0], [6, 42, 2], [8, 36, 6]])

# accuracy, Acc_Beg, Acc_Dev, Acc_Prof, precision, recall, F1, kappa
PUBLISHED_ROWS = {
    "J2-1": (J2_1, (".45", ".68", ".56", ".12", ".62", ".45", ".41", ".32")),
    "J6-1": (J6_1, (".53", ".62", ".84", ".12", ".62", ".53", ".48", ".38")),
}


def _pairs(m: ConfusionMatrix) -> list[tuple[ProficiencyLevel, ProficiencyLevel]]:
    return [
        (LEVELS[i], LEVELS[j])
        for i in range(3)
        for j in range(3)
        for _ in range(m.counts[i][j])
    ]


def _flat(value: float) -> MetricsReport:
    return MetricsReport(
        accuracy=value,
        acc_per_class=(value, value, value),
        precision_macro=value,
        recall_macro=value,
        f1_macro=value,
        kappa_qw=value,
    )


class TestPublishedRows:
    """Confusion matrices reproduce the published metric rows at two decimals."""

    @pytest.mark.parametrize("item", sorted(PUBLISHED_ROWS))
    def test_row(self, item: str) -> None:
        matrix, expected = PUBLISHED_ROWS[item]
        r = report(matrix)
        got = (
            fmt(r.accuracy),
            *(fmt(v) for v in r.acc_per_class),
            fmt(r.precision_macro),
            fmt(r.recall_macro),
            fmt(r.f1_macro),
            fmt(r.kappa_qw),
        )
        assert got == expected
        assert r.n == 150

    def test_confusion_from_pairs(self) -> None:
        assert confusion(_pairs(J2_1)) == J2_1

    def test_sklearn_agrees(self) -> None:
        metrics = pytest.importorskip("sklearn.metrics")
        for matrix in (J2_1, J6_1):
            pairs = _pairs(matrix)
            y_true = [int(t) for t, _ in pairs]
            y_pred = [int(p) for _, p in pairs]
            r = report(matrix)
            kappa = metrics.cohen_kappa_score(y_true, y_pred, weights="quadratic")
            assert r.kappa_qw == pytest.approx(kappa)
            precision, recall, f1, _ = metrics.precision_recall_fscore_support(
                y_true, y_pred, labels=[0, 1, 2], average="macro", zero_division=0
            )
            assert r.precision_macro == pytest.approx(precision)
            assert r.recall_macro == pytest.approx(recall)
            assert r.f1_macro == pytest.approx(f1)


class TestKappa:
    """Quadratic-weighted kappa edge cases."""

    def test_perfect_agreement(self) -> None:
        assert quadratic_weighted_kappa(confusion([(B, B), (D, D), (R, R)])) == pytest.approx(1.0)

    def test_single_class_is_degenerate(self) -> None:
        m = confusion([(D, D)] * 5)
        with pytest.raises(DegenerateAgreement):
            quadratic_weighted_kappa(m)
        r = report(m)
        assert r.kappa_qw is None
        assert r.kappa_degenerate
        assert r.accuracy == 1.0

    def test_never_predicted_class_has_zero_precision(self) -> None:
        m = confusion([(B, B), (R, B), (D, D)])
        assert per_class_precision(m).tolist() == [0.5, 1.0, 0.0]

    def test_empty(self) -> None:
        with pytest.raises(EmptyInput):
            confusion([])
        with pytest.raises(EmptyInput):
            report(ConfusionMatrix.from_array(np.zeros((3, 3), dtype=int)))

    @settings(max_examples=1000, deadline=None)
    @given(
        st.lists(
            st.tuples(st.sampled_from(LEVELS), st.sampled_from(LEVELS)), min_size=1, max_size=300
        )
    )
    def test_matches_disagreement_form(
        self, pairs: list[tuple[ProficiencyLevel, ProficiencyLevel]]
    ) -> None:
        """kappa = 1 - weighted observed disagreement / weighted expected disagreement."""
        m = confusion(pairs)
        arr = m.array.astype(float) / m.n
        rows, cols = arr.sum(axis=1), arr.sum(axis=0)
        numerator = denominator = 0.0
        for i in range(3):
            for j in range(3):
                weight = (i - j) ** 2 / 4
                numerator += weight * arr[i, j]
                denominator += weight * rows[i] * cols[j]
        if denominator < 1e-12:
            with pytest.raises(DegenerateAgreement):
                quadratic_weighted_kappa(m)
            return
        brute = 1 - numerator / denominator
        assert quadratic_weighted_kappa(m) == pytest.approx(brute, rel=0.0, abs=1e-12)

    def test_matrix_shape(self) -> None:
        with pytest.raises(ValidationError):
            ConfusionMatrix(counts=((1, 2), (3, 4)))
        with pytest.raises(ValidationError):
            ConfusionMatrix(counts=((1, 0, 0), (0, -1, 0), (0, 0, 1)))

    def test_transpose_keeps_kappa(self) -> None:
        assert quadratic_weighted_kappa(J2_1.transpose()) == pytest.approx(
            quadratic_weighted_kappa(J2_1)
        )

    @pytest.mark.parametrize(
        ("kappa", "band"),
        [
            (None, KappaBand.UNDEFINED),
            (-0.1, KappaBand.POOR),
            (0.0, KappaBand.POOR),
            (0.2, KappaBand.SLIGHT),
            (0.32, KappaBand.FAIR),
            (0.5, KappaBand.MODERATE),
            (0.7, KappaBand.SUBSTANTIAL),
            (0.95, KappaBand.ALMOST_PERFECT),
        ],
    )
    def test_band(self, kappa: float | None, band: KappaBand) -> None:
        assert kappa_band(kappa) is band


class TestAggregate:
    """Column means and sample SDs across items."""

    def test_published_accuracy_column(self) -> None:
        column = [0.50, 0.45, 0.53, 0.57, 0.47, 0.53]
        agg = aggregate({f"item-{i}": _flat(v) for i, v in enumerate(column)})
        assert fmt(agg.mean.accuracy) == ".51"
        assert agg.sd is not None
        assert 0.03 <= agg.sd.accuracy <= 0.05
        assert agg.mean.n == 6

    def test_single_item_has_no_sd(self) -> None:
        agg = aggregate({"M3-1": _flat(0.6)})
        assert agg.mean.accuracy == pytest.approx(0.6)
        assert agg.sd is None
        with pytest.raises(InsufficientItems):
            sample_sd([0.6])

    def test_identical_items_have_zero_sd(self) -> None:
        agg = aggregate({f"item-{i}": _flat(0.4) for i in range(6)})
        assert agg.sd is not None
        assert agg.sd.accuracy == pytest.approx(0.0, abs=1e-12)
        assert agg.sd.acc_per_class == pytest.approx((0.0, 0.0, 0.0), abs=1e-12)

    def test_undefined_kappa_is_skipped(self) -> None:
        degenerate = _flat(1.0).model_copy(update={"kappa_qw": None, "kappa_degenerate": True})
        agg = aggregate({"a": _flat(0.2), "b": _flat(0.4), "c": degenerate})
        assert agg.mean.kappa_qw == pytest.approx(0.3)
        assert agg.mean.accuracy == pytest.approx(1.6 / 3)

    def test_empty(self) -> None:
        with pytest.raises(EmptyInput):
            aggregate({})


class TestScorePairs:
    def test_unscored_become_maximal_misses(self) -> None:
        pairs, unscored = score_pairs([(B, None), (D, D), (R, None)])
        assert pairs == [(B, MAXIMAL_MISS[B]), (D, D), (R, B)]
        assert MAXIMAL_MISS[B] is R
        assert unscored == 2

    def test_exclude_unscored(self) -> None:
        pairs, unscored = score_pairs([(B, None), (D, D)], exclude_unscored=True)
        assert pairs == [(D, D)]
        assert unscored == 1


class TestTables:
    """Two-decimal rendering of the report tables."""

    @pytest.mark.parametrize(
        ("value", "text"),
        [(0.4533, ".45"), (1.0, "1.00"), (0.0, ".00"), (-0.05, "-.05"), (None, "-")],
    )
    def test_fmt(self, value: float | None, text: str) -> None:
        assert fmt(value) == text

    def test_testing_table(self) -> None:
        agg = aggregate({"J2-1": report(J2_1), "J6-1": report(J6_1)})
        text = render_text(tables.testing_table(agg))
        assert "J2-1" in text
        assert ".68" in text
        assert "Fair" in text
        assert "Mean" in text
        assert "SD" in text

    def test_validation_table(self) -> None:
        text = render_text(validation_table({"J2-1": validation_row(J2_1)}))
        assert "Acc_Beg (n = 50)" in text
        assert ".45" in text

    def test_confusion_table(self) -> None:
        text = render_text(confusion_table("J6-1", J6_1))
        assert "Confusion Matrix J6-1" in text
        assert "42" in text


class TestOracleCalibration:
    """A noisy oracle reproduces the confusion rates it was built from."""

    def test_noise_matches_source_rates(self) -> None:
        rubric = get_task("M3-1").rubric
        labels = {f"case-{i:05d}": LEVELS[i % 3] for i in range(15_000)}
        script = OracleScript(
            hidden_labels=labels,
            hidden_verdicts={},
            noise_matrix=noise_from_confusion(J2_1.counts),
            seed=11,
        )
        assessments = oracle_assessments(list(labels), script, rubric)
        m = confusion((labels[a.case_id], a.predicted) for a in assessments)
        observed = m.array / m.n
        target = J2_1.array / J2_1.n
        assert np.abs(observed - target).max() <= 0.02
