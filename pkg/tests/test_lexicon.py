from __future__ import annotations

import random

import pytest

from conftest import make_dataset, make_sample
from toxspan.aho import AhoCorasick
from toxspan.exceptions import FormatError
from toxspan.lexicon import (
    InSpanRule,
    Lexicon,
    LexiconBuildConfig,
    MatchKind,
    MatchMode,
    WordStats,
    build_lexicon,
    count_word_stats,
    load_wordlist,
    lexicon_from_stats,
    predict,
    save_lexicon,
    toxicity_score,
)
from toxspan.spans import SpanSet


@pytest.fixture
def counting_dataset():
    # "idiot" occurs 3 times: twice fully inside spans, once outside
    return make_dataset(
        [
            make_sample("s1", "you idiot go away", [(4, 9)]),
            make_sample("s2", "what an idiot move", [(8, 13)]),
            make_sample("s3", "idiot is a word", [], toxic=True),
        ]
    )


class TestCounting:
    def test_word_never_in_span(self, counting_dataset):
        stats = count_word_stats(counting_dataset)
        assert stats["away"].in_span_count == 0
        assert stats["away"].total_count == 1

    def test_hand_counts(self, counting_dataset):
        stats = count_word_stats(counting_dataset)
        assert stats["idiot"] == WordStats("idiot", 3, 2)

    def test_half_covered_token_not_in_span_under_majority(self):
        # span covers exactly 2 of the 4 characters of "word"
        ds = make_dataset([make_sample("s1", "word", [(0, 2)])])
        stats = count_word_stats(ds, InSpanRule.MAJORITY_CHARS)
        assert stats["word"].in_span_count == 0

    def test_majority_needs_strictly_more_than_half(self):
        ds = make_dataset([make_sample("s1", "word", [(0, 3)])])
        stats = count_word_stats(ds, InSpanRule.MAJORITY_CHARS)
        assert stats["word"].in_span_count == 1

    def test_any_overlap_rule(self):
        ds = make_dataset([make_sample("s1", "word", [(0, 1)])])
        stats = count_word_stats(ds, InSpanRule.ANY_OVERLAP)
        assert stats["word"].in_span_count == 1

    def test_full_containment_rule(self):
        ds = make_dataset([make_sample("s1", "word here", [(0, 3)])])
        stats = count_word_stats(ds, InSpanRule.FULL_CONTAINMENT)
        assert stats["word"].in_span_count == 0
        full = count_word_stats(make_dataset([make_sample("s1", "word here", [(0, 4)])]),
                                InSpanRule.FULL_CONTAINMENT)
        assert full["word"].in_span_count == 1

    def test_tokens_lowercased(self):
        ds = make_dataset([make_sample("s1", "Idiot IDIOT idiot", [])], name="t")
        stats = count_word_stats(ds)
        assert stats["idiot"].total_count == 3


class TestScore:
    def test_ratio(self):
        assert toxicity_score(WordStats("w", 3, 2)) == pytest.approx(2 / 3)

    def test_never_in_span_scores_zero(self):
        assert toxicity_score(WordStats("w", 7, 0)) == 0.0

    def test_always_in_span_scores_one(self):
        assert toxicity_score(WordStats("w", 4, 4)) == 1.0

    def test_zero_occurrences_is_error(self):
        with pytest.raises(ValueError):
            toxicity_score(WordStats("w", 0, 0))


class TestBuild:
    def test_theta_one_gives_empty_lexicon(self, counting_dataset):
        lex = build_lexicon(counting_dataset, LexiconBuildConfig(theta=1.0))
        assert len(lex) == 0

    def test_min_occ_filters_regardless_of_score(self, counting_dataset):
        # "away" occurs once with score 0; "idiot" occurs 3 times
        lex = build_lexicon(counting_dataset, LexiconBuildConfig(theta=0.0, min_occ=5))
        assert "idiot" not in lex.entries

    def test_strictly_above_theta(self, counting_dataset):
        at_threshold = build_lexicon(counting_dataset, LexiconBuildConfig(theta=2 / 3))
        assert "idiot" not in at_threshold.entries
        below = build_lexicon(counting_dataset, LexiconBuildConfig(theta=0.5))
        assert below.entries["idiot"] == pytest.approx(2 / 3)

    def test_monotone_in_theta_and_min_occ(self, counting_dataset):
        thetas = [round(0.05 * i, 2) for i in range(21)]
        previous = None
        for theta in thetas:
            entries = set(build_lexicon(counting_dataset, LexiconBuildConfig(theta=theta)).entries)
            if previous is not None:
                assert entries <= previous
            previous = entries
        previous = None
        for min_occ in (1, 3, 5, 7, 11):
            entries = set(
                build_lexicon(counting_dataset, LexiconBuildConfig(min_occ=min_occ)).entries
            )
            if previous is not None:
                assert entries <= previous
            previous = entries

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            LexiconBuildConfig(theta=1.5)
        with pytest.raises(ValueError):
            LexiconBuildConfig(min_occ=0)


class TestWordlistIO:
    def test_case_fold_and_dedup(self, tmp_path):
        path = tmp_path / "w.txt"
        path.write_text("Idiot\nidiot\n", encoding="utf-8")
        lex = load_wordlist(path)
        assert list(lex.entries) == ["idiot"]
        assert lex.source == "wordlist"

    def test_scored_entries(self, tmp_path):
        path = tmp_path / "w.txt"
        path.write_text("jerk\t0.9\n", encoding="utf-8")
        lex = load_wordlist(path)
        assert lex.entries["jerk"] == pytest.approx(0.9)

    def test_four_named_variants_loadable(self, tmp_path):
        for name in ("Hurtlex-c", "Hurtlex-i", "Wiegand-b", "Wiegand-e"):
            path = tmp_path / f"{name}.txt"
            path.write_text("slur\njerk\n", encoding="utf-8")
            lex = load_wordlist(path, name=name)
            assert lex.name == name
            assert len(lex) == 2

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "w.txt"
        path.write_text("", encoding="utf-8")
        with pytest.raises(FormatError, match="empty"):
            load_wordlist(path)

    def test_save_sorts_by_descending_score(self, tmp_path, counting_dataset):
        lex = lexicon_from_stats(count_word_stats(counting_dataset), LexiconBuildConfig())
        path = tmp_path / "out.tsv"
        save_lexicon(lex, path)
        scores = [float(line.split("\t")[1]) for line in path.read_text().splitlines()]
        assert scores == sorted(scores, reverse=True)
        reloaded = load_wordlist(path)
        assert set(reloaded.entries) == set(lex.entries)


class TestPredict:
    def test_substring_matches_inside_words(self):
        lex = Lexicon("t", "wordlist", {"ho": None, "lame": None})
        spans = predict("somehow blame him", lex)
        assert spans == SpanSet([(4, 6), (9, 13)])

    def test_word_boundary_rejects_inner_matches(self):
        lex = Lexicon("t", "wordlist", {"ho": None, "lame": None})
        spans = predict("somehow blame him", lex, MatchMode(MatchKind.WORD_BOUNDARY))
        assert spans == SpanSet()

    def test_word_boundary_accepts_whole_tokens(self):
        lex = Lexicon("t", "wordlist", {"lame": None})
        spans = predict("a lame joke", lex, MatchMode(MatchKind.WORD_BOUNDARY))
        assert spans == SpanSet([(2, 6)])

    def test_empty_lexicon_predicts_nothing(self):
        assert predict("anything at all", Lexicon("t", "wordlist", {})) == SpanSet()

    def test_case_folding(self):
        lex = Lexicon("t", "wordlist", {"jerk": None})
        assert predict("JERK alert", lex) == SpanSet([(0, 4)])
        assert predict("JERK alert", lex, MatchMode(case_fold=False)) == SpanSet()

    def test_overlapping_matches_union(self):
        lex = Lexicon("t", "wordlist", {"aba": None})
        # occurrences at 0 and 2 overlap and coalesce
        assert predict("ababa", lex) == SpanSet([(0, 5)])

    def test_entry_order_irrelevant(self):
        entries = {"ab": None, "bc": None, "abc": None}
        reversed_entries = dict(reversed(entries.items()))
        text = "xxabcxx"
        a = predict(text, Lexicon("t", "wordlist", entries))
        b = predict(text, Lexicon("t", "wordlist", reversed_entries))
        assert a == b

    def test_word_boundary_subset_of_substring(self):
        rng = random.Random(5)
        words = ["low", "glow", "lower", "bell", "el", "hollow"]
        for _ in range(50):
            text = " ".join(rng.choice(words) for _ in range(rng.randint(1, 10)))
            lex = Lexicon("t", "wordlist", {w: None for w in rng.sample(words, 3)})
            narrow = predict(text, lex, MatchMode(MatchKind.WORD_BOUNDARY))
            wide = predict(text, lex)
            assert narrow.to_offsets() <= wide.to_offsets()


class TestAutomaton:
    def test_empty_pattern_rejected(self):
        with pytest.raises(ValueError):
            AhoCorasick([""])

    def test_finds_all_occurrences(self):
        ac = AhoCorasick(["he", "she", "his", "hers"])
        hits = sorted(ac.find("ushers"))
        assert hits == [(1, 4), (2, 4), (2, 6)]

    def test_matches_naive_scan_on_random_inputs(self):
        rng = random.Random(17)
        alphabet = "abcd "
        for _ in range(100):
            text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 60)))
            patterns = {
                "".join(rng.choice(alphabet[:4]) for _ in range(rng.randint(1, 4)))
                for _ in range(rng.randint(1, 8))
            }
            ac = AhoCorasick(patterns)
            expected = set()
            for pattern in patterns:
                for i in range(len(text) - len(pattern) + 1):
                    if text[i : i + len(pattern)] == pattern:
                        expected.add((i, i + len(pattern)))
            assert set(ac.find(text)) == expected
