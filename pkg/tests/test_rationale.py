from __future__ import annotations

import random

import pytest

from conftest import make_dataset, make_sample
from toxspan.exceptions import FormatError
from toxspan.rationale import (
    ThresholdConfig,
    TokenScore,
    TokenScores,
    load_scores,
    normalize,
    threshold_to_spans,
    write_scores,
)
from toxspan.spans import SpanSet

TAU_GRID = [round(-0.05 + 0.025 * i, 3) for i in range(23)]


def scores_of(*values, width=4):
    tokens = []
    pos = 0
    for value in values:
        tokens.append(TokenScore(pos, pos + width, float(value)))
        pos += width + 1
    return TokenScores("s", "m", tuple(tokens))


class TestTokenScores:
    def test_zero_tokens_allowed(self):
        assert TokenScores("s", "m", ()).tokens == ()

    def test_overlapping_tokens_rejected(self):
        with pytest.raises(ValueError, match="non-overlapping"):
            TokenScores("s", "m", (TokenScore(0, 4, 1.0), TokenScore(2, 6, 1.0)))

    def test_unsorted_tokens_rejected(self):
        with pytest.raises(ValueError):
            TokenScores("s", "m", (TokenScore(5, 8, 1.0), TokenScore(0, 4, 1.0)))

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            TokenScores("s", "m", (TokenScore(3, 3, 1.0),))


class TestIO:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        original = {"s": scores_of(2, 1, 1)}
        write_scores(original, path)
        assert load_scores(path) == original

    def test_token_end_beyond_text_rejected(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        write_scores({"s1": TokenScores("s1", "m", (TokenScore(0, 50, 1.0),))}, path)
        ds = make_dataset([make_sample("s1", "short text", [])])
        with pytest.raises(FormatError, match="s1"):
            load_scores(path, dataset=ds)

    def test_unknown_id_rejected_with_dataset(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        write_scores({"ghost": scores_of(1)}, path)
        ds = make_dataset([make_sample("s1", "short text", [])])
        with pytest.raises(FormatError, match="ghost"):
            load_scores(path, dataset=ds)

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        line = '{"id": "s", "method": "m", "tokens": [[0, 2, 1.0]]}\n'
        path.write_text(line + line, encoding="utf-8")
        with pytest.raises(FormatError, match="duplicate"):
            load_scores(path)


class TestNormalize:
    def test_rescales_to_unit_sum(self):
        normalized = normalize(scores_of(2, 1, 1))
        assert [t.score for t in normalized.tokens] == [0.5, 0.25, 0.25]
        assert normalized.degenerate is False

    def test_all_zero_stays_zero_with_flag(self):
        normalized = normalize(scores_of(0, 0, 0))
        assert [t.score for t in normalized.tokens] == [0.0, 0.0, 0.0]
        assert normalized.degenerate is True

    def test_single_token(self):
        assert [t.score for t in normalize(scores_of(1)).tokens] == [1.0]

    def test_negative_scores_supported(self):
        normalized = normalize(scores_of(3, -1))
        assert sum(t.score for t in normalized.tokens) == pytest.approx(1.0, abs=1e-9)
        assert normalized.tokens[1].score < 0

    def test_sum_property_on_random_vectors(self):
        rng = random.Random(3)
        for _ in range(200):
            values = [rng.uniform(-1, 2) for _ in range(rng.randint(1, 12))]
            if abs(sum(values)) <= 1e-9:
                continue
            normalized = normalize(scores_of(*values))
            assert sum(t.score for t in normalized.tokens) == pytest.approx(1.0, abs=1e-9)


class TestThreshold:
    def test_only_high_scores_selected(self):
        normalized = normalize(scores_of(2, 1, 1))
        assert threshold_to_spans(normalized, ThresholdConfig(0.3)) == SpanSet([(0, 4)])

    def test_negative_tau_selects_all_nonnegative(self):
        normalized = normalize(scores_of(2, 1, 1))
        spans = threshold_to_spans(normalized, ThresholdConfig(-0.05))
        assert spans == SpanSet([(0, 4), (5, 9), (10, 14)])

    def test_half_tau_needs_dominant_token(self):
        balanced = normalize(scores_of(1, 1))
        assert threshold_to_spans(balanced, ThresholdConfig(0.5)) == SpanSet()
        dominant = normalize(scores_of(3, 1))
        assert threshold_to_spans(dominant, ThresholdConfig(0.5)) == SpanSet([(0, 4)])

    def test_strictly_above(self):
        normalized = normalize(scores_of(1, 1, 1, 1))
        assert threshold_to_spans(normalized, ThresholdConfig(0.25)) == SpanSet()

    def test_antitone_in_tau(self):
        rng = random.Random(9)
        for _ in range(50):
            values = [rng.uniform(-0.5, 1.5) for _ in range(rng.randint(1, 10))]
            normalized = normalize(scores_of(*values))
            previous = None
            for tau in TAU_GRID:
                selected = threshold_to_spans(normalized, ThresholdConfig(tau)).to_offsets()
                if previous is not None:
                    assert selected <= previous
                previous = selected

    def test_spans_are_whole_tokens(self):
        normalized = normalize(scores_of(5, 1, 4))
        spans = threshold_to_spans(normalized, ThresholdConfig(0.3))
        token_ranges = {(t.start, t.end) for t in normalized.tokens}
        for covered in spans.ranges:
            assert covered in token_ranges
