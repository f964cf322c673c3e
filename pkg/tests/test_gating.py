from __future__ import annotations

import pytest

from conftest import make_dataset, make_sample
from toxspan.exceptions import FormatError, ToxspanError
from toxspan.gating import (
    BinaryPrediction,
    gate,
    lexicon_binary,
    load_binary,
    load_span_predictions,
    write_binary,
    write_span_predictions,
)
from toxspan.lexicon import Lexicon, predict
from toxspan.spans import SpanSet


class TestBinaryIO:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "b.jsonl"
        path.write_text("", encoding="utf-8")
        assert load_binary(path) == {}

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "b.jsonl"
        line = '{"id": "x", "toxic": true}\n'
        path.write_text(line + line, encoding="utf-8")
        with pytest.raises(FormatError, match="duplicate"):
            load_binary(path)

    def test_roundtrip(self, tmp_path):
        path = tmp_path / "b.jsonl"
        preds = {"a": BinaryPrediction("a", True), "b": BinaryPrediction("b", False)}
        write_binary(preds, path)
        assert load_binary(path) == preds

    def test_non_boolean_rejected(self, tmp_path):
        path = tmp_path / "b.jsonl"
        path.write_text('{"id": "x", "toxic": 1}\n', encoding="utf-8")
        with pytest.raises(FormatError, match="boolean"):
            load_binary(path)


class TestSpanPredictionIO:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "p.jsonl"
        preds = {"a": SpanSet([(0, 3), (5, 8)]), "b": SpanSet()}
        write_span_predictions(preds, path)
        assert load_span_predictions(path) == preds

    def test_validated_against_dataset(self, tmp_path):
        path = tmp_path / "p.jsonl"
        write_span_predictions({"s1": SpanSet([(0, 99)])}, path)
        ds = make_dataset([make_sample("s1", "short", [])])
        with pytest.raises(FormatError, match="s1"):
            load_span_predictions(path, dataset=ds)


class TestGate:
    def test_all_toxic_is_identity(self):
        spans = {"a": SpanSet([(0, 2)]), "b": SpanSet()}
        binary = {k: BinaryPrediction(k, True) for k in spans}
        assert gate(spans, binary) == spans

    def test_nontoxic_verdict_empties_any_prediction(self):
        spans = {"a": SpanSet([(0, 2), (4, 9)])}
        binary = {"a": BinaryPrediction("a", False)}
        assert gate(spans, binary) == {"a": SpanSet()}

    def test_all_nontoxic_empties_everything(self):
        spans = {"a": SpanSet([(0, 2)]), "b": SpanSet([(1, 5)])}
        binary = {k: BinaryPrediction(k, False) for k in spans}
        assert all(not s for s in gate(spans, binary).values())

    def test_missing_verdict_names_id(self):
        with pytest.raises(ToxspanError, match="lost"):
            gate({"lost": SpanSet()}, {})

    def test_idempotent(self):
        spans = {"a": SpanSet([(0, 2)]), "b": SpanSet([(1, 5)])}
        binary = {"a": BinaryPrediction("a", True), "b": BinaryPrediction("b", False)}
        once = gate(spans, binary)
        assert gate(once, binary) == once

    def test_never_adds_offsets(self):
        spans = {"a": SpanSet([(0, 2)]), "b": SpanSet()}
        binary = {"a": BinaryPrediction("a", True), "b": BinaryPrediction("b", True)}
        gated = gate(spans, binary)
        for sid in spans:
            assert gated[sid].to_offsets() <= spans[sid].to_offsets()


class TestLexiconBinary:
    def _dataset(self):
        return make_dataset(
            [
                make_sample("a", "you jerk", [(4, 8)]),
                make_sample("b", "nice words only", []),
            ]
        )

    def test_empty_lexicon_is_all_nontoxic(self):
        verdicts = lexicon_binary(self._dataset(), Lexicon("t", "wordlist", {}))
        assert all(not v.toxic for v in verdicts.values())

    def test_match_means_toxic(self):
        verdicts = lexicon_binary(self._dataset(), Lexicon("t", "wordlist", {"jerk": None}))
        assert verdicts["a"].toxic is True
        assert verdicts["b"].toxic is False

    def test_gating_own_predictions_changes_nothing(self):
        ds = self._dataset()
        lex = Lexicon("t", "wordlist", {"jerk": None, "nice": None})
        spans = {s.id: predict(s.text, lex) for s in ds.samples}
        verdicts = lexicon_binary(ds, lex)
        assert gate(spans, verdicts) == spans
