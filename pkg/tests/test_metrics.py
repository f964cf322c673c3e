from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from conftest import make_dataset, make_sample
from toxspan.exceptions import ToxspanError
from toxspan.metrics import (
    DegenerateCase,
    EvalReport,
    aggregate,
    evaluate,
    macro_f1p,
    score_sample,
)
from toxspan.spans import SpanSet

offset_sets = st.sets(st.integers(min_value=0, max_value=40), max_size=20)


def spanset(*ranges):
    return SpanSet(ranges)


class TestScoreSample:
    def test_both_empty_scores_one(self):
        score = score_sample(SpanSet(), SpanSet())
        assert score.f1_plus == 1.0
        assert score.degenerate_case is DegenerateCase.BOTH_EMPTY

    def test_prediction_on_empty_gold_scores_zero(self):
        score = score_sample(spanset((0, 3)), SpanSet())
        assert score.f1_plus == 0.0
        assert score.degenerate_case is DegenerateCase.PRED_ONLY

    def test_empty_prediction_on_gold_scores_zero(self):
        score = score_sample(SpanSet(), spanset((0, 3)))
        assert score.f1_plus == 0.0
        assert score.degenerate_case is DegenerateCase.GOLD_ONLY

    def test_partial_overlap(self):
        score = score_sample(spanset((0, 5)), spanset((2, 7)))
        assert score.precision == 0.6
        assert score.recall == 0.6
        assert score.f1_plus == 0.6
        assert score.degenerate_case is DegenerateCase.NORMAL

    def test_disjoint_nonempty_sets_score_zero_not_nan(self):
        score = score_sample(spanset((0, 2)), spanset((5, 8)))
        assert (score.f1_plus, score.precision, score.recall) == (0.0, 0.0, 0.0)

    @given(offset_sets)
    def test_exact_match_scores_one(self, offsets):
        s = SpanSet.from_offsets(offsets)
        assert score_sample(s, s).f1_plus == 1.0

    @given(offset_sets, offset_sets)
    def test_precision_recall_swap_symmetry(self, a, b):
        if not a or not b:
            return
        x, y = SpanSet.from_offsets(a), SpanSet.from_offsets(b)
        assert score_sample(x, y).precision == score_sample(y, x).recall

    @given(offset_sets, offset_sets)
    def test_matches_explicit_set_arithmetic(self, a, b):
        got = score_sample(SpanSet.from_offsets(a), SpanSet.from_offsets(b))
        if not b:
            expected = 1.0 if not a else 0.0
        elif not a:
            expected = 0.0
        else:
            inter = len(a & b)
            expected = 0.0 if inter == 0 else 2 * inter / (len(a) + len(b))
        assert got.f1_plus == pytest.approx(expected, abs=1e-12)


class TestAggregate:
    def test_single(self):
        score = score_sample(SpanSet(), SpanSet())
        assert aggregate([score]) == (1.0, 1.0, 1.0)

    def test_mean(self):
        ones = score_sample(SpanSet(), SpanSet())
        zeros = score_sample(spanset((0, 2)), SpanSet())
        f1, p, r = aggregate([ones, zeros])
        assert (f1, p, r) == (0.5, 0.5, 0.5)

    def test_hand_mean(self):
        partial = score_sample(spanset((0, 5)), spanset((2, 7)))
        zero = score_sample(SpanSet(), spanset((0, 2)))
        f1, _, _ = aggregate([partial, partial, zero])
        assert f1 == pytest.approx(0.4)

    def test_empty_is_absent_not_nan(self):
        assert aggregate([]) is None


class TestMacro:
    def test_hand_value(self):
        assert macro_f1p(0.6, 0.3) == pytest.approx(0.4, abs=1e-12)

    @given(st.floats(min_value=0, max_value=1))
    def test_identity_on_equal_sides(self, x):
        assert macro_f1p(x, x) == pytest.approx(x)

    @given(st.floats(min_value=0, max_value=1))
    def test_zero_side_forces_zero(self, x):
        assert macro_f1p(x, 0.0) == 0.0


class TestEvaluate:
    def _dataset(self):
        return make_dataset(
            [
                make_sample("t1", "bad stuff here", [(0, 3)], split="test"),
                make_sample("t2", "also bad", [(5, 8)], split="test"),
                make_sample("t3", "toxic but unmarked", [], toxic=True, split="test"),
                make_sample("n1", "fine", [], split="test"),
                make_sample("n2", "ok", [], split="test"),
            ]
        )

    def test_perfect_predictions(self):
        ds = self._dataset()
        preds = {s.id: s.gold_spans for s in ds.samples}
        report = evaluate(ds, preds)
        assert report.toxic_f1p == 1.0
        assert report.nontoxic_f1p == 1.0
        assert report.macro_f1p == 1.0

    def test_all_empty_predictions(self):
        ds = self._dataset()
        report = evaluate(ds, {s.id: SpanSet() for s in ds.samples})
        assert report.nontoxic_f1p == 1.0
        # the only toxic sample scoring 1 is the one with empty gold
        assert report.toxic_f1p == pytest.approx(1 / 3)

    def test_missing_predictions_counted_as_empty(self):
        ds = self._dataset()
        report = evaluate(ds, {})
        assert report.missing_predictions == 5
        assert report.nontoxic_f1p == 1.0

    def test_unknown_id_rejected(self):
        ds = self._dataset()
        with pytest.raises(ToxspanError, match="ghost"):
            evaluate(ds, {"ghost": SpanSet()})

    def test_macro_absent_without_nontoxic_subset(self):
        ds = make_dataset([make_sample("t1", "bad", [(0, 3)], split="test")])
        report = evaluate(ds, {"t1": spanset((0, 3))})
        assert report.nontoxic_f1p is None
        assert report.macro_f1p is None
        assert report.toxic_f1p == 1.0

    def test_deterministic(self):
        ds = self._dataset()
        preds = {s.id: s.gold_spans for s in ds.samples}
        assert evaluate(ds, preds) == evaluate(ds, preds)

    def test_sample_order_irrelevant(self):
        ds = self._dataset()
        preds = {"t1": spanset((0, 2)), "t2": SpanSet(), "t3": SpanSet(), "n1": spanset((0, 1)), "n2": SpanSet()}
        shuffled = make_dataset(list(reversed(ds.samples)))
        assert evaluate(ds, preds) == evaluate(shuffled, preds)

    def test_row_serialization_covers_table_columns(self):
        ds = self._dataset()
        row = evaluate(ds, {}).to_row()
        for column in ("toxic_f1p", "toxic_precision", "toxic_recall", "nontoxic_f1p", "macro_f1p"):
            assert column in row
        assert tuple(row) == EvalReport.COLUMNS
