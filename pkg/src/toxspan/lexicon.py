"""Word lexicons: induction from span-annotated data, file loading, matching.

A lexicon entry's toxicity score is the frequency with which the word
occurs inside gold toxic spans relative to its overall frequency in the
training texts. Induction keeps words whose score is strictly above a
threshold ``theta`` and whose total count reaches ``min_occ``; the count
floor exists because the score of a rare word cannot be measured reliably.

Prediction marks every occurrence of every entry in a text. The default
is plain substring matching with case folding (so entries also fire inside
longer words); word-boundary matching is the stricter alternative that
only accepts occurrences aligned with token boundaries.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping

from .aho import AhoCorasick
from .corpus import Dataset
from .exceptions import FormatError
from .spans import SpanSet, Token, overlap, tokenize

log = logging.getLogger("toxspan")


class InSpanRule(Enum):
    """When does a token occurrence count as inside the gold spans."""

    MAJORITY_CHARS = "majority_chars"  # strictly more than half its characters
    ANY_OVERLAP = "any_overlap"
    FULL_CONTAINMENT = "full_containment"


class WordStats:
    """Occurrence counts for one lowercased word."""

    __slots__ = ("word", "total_count", "in_span_count")

    def __init__(self, word: str, total_count: int = 0, in_span_count: int = 0):
        self.word = word
        self.total_count = total_count
        self.in_span_count = in_span_count

    def __eq__(self, other: object) -> bool:
        if isinstance(other, WordStats):
            return (self.word, self.total_count, self.in_span_count) == (
                other.word,
                other.total_count,
                other.in_span_count,
            )
        return NotImplemented

    def __repr__(self) -> str:
        return f"WordStats({self.word!r}, total={self.total_count}, in_span={self.in_span_count})"


@dataclass(frozen=True)
class LexiconBuildConfig:
    theta: float = 0.0
    min_occ: int = 1
    in_span_rule: InSpanRule = InSpanRule.MAJORITY_CHARS

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must be in [0, 1], got {self.theta}")
        if self.min_occ < 1:
            raise ValueError(f"min_occ must be >= 1, got {self.min_occ}")


class MatchKind(Enum):
    SUBSTRING = "substring"
    WORD_BOUNDARY = "word_boundary"


@dataclass(frozen=True)
class MatchMode:
    mode: MatchKind = MatchKind.SUBSTRING
    case_fold: bool = True


@dataclass(eq=False)
class Lexicon:
    """A named set of lowercased words, each with an optional score.

    Treated as immutable once constructed; the matching automaton is built
    lazily on first use and reused afterwards.
    """

    name: str
    source: str  # "constructed" or "wordlist"
    entries: dict[str, float | None] = field(default_factory=dict)

    def __post_init__(self) -> None:
        bad = [w for w in self.entries if w != w.lower()]
        if bad:
            raise ValueError(f"lexicon {self.name!r}: entry {bad[0]!r} is not lowercased")
        self._automaton: AhoCorasick | None = None

    def automaton(self) -> AhoCorasick:
        if self._automaton is None:
            self._automaton = AhoCorasick(self.entries)
        return self._automaton

    def __len__(self) -> int:
        return len(self.entries)


def _chars_in_spans(token: Token, gold: SpanSet) -> int:
    return overlap(SpanSet([(token.start, token.end)]), gold)


def count_word_stats(
    train: Dataset,
    rule: InSpanRule = InSpanRule.MAJORITY_CHARS,
    tokenizer: Callable[[str], list[Token]] = tokenize,
) -> dict[str, WordStats]:
    """Count, per lowercased word, total occurrences and in-span occurrences."""
    stats: dict[str, WordStats] = {}
    for sample in train.samples:
        gold = sample.gold_spans
        for token in tokenizer(sample.text):
            word = token.surface.lower()
            entry = stats.get(word)
            if entry is None:
                entry = stats[word] = WordStats(word)
            entry.total_count += 1
            if not gold:
                continue
            inside = _chars_in_spans(token, gold)
            if rule is InSpanRule.MAJORITY_CHARS:
                in_span = inside * 2 > (token.end - token.start)
            elif rule is InSpanRule.ANY_OVERLAP:
                in_span = inside > 0
            else:
                in_span = inside == token.end - token.start
            if in_span:
                entry.in_span_count += 1
    return stats


def toxicity_score(stats: WordStats) -> float:
    """In-span occurrences relative to all occurrences."""
    if stats.total_count < 1:
        raise ValueError(f"word {stats.word!r} has no occurrences to score")
    return stats.in_span_count / stats.total_count


def lexicon_from_stats(
    stats: Mapping[str, WordStats],
    cfg: LexiconBuildConfig,
    name: str = "constructed",
) -> Lexicon:
    """Filter counted words into a lexicon: count >= min_occ, score > theta."""
    entries: dict[str, float | None] = {}
    for word in sorted(stats):
        ws = stats[word]
        if ws.total_count < cfg.min_occ:
            continue
        score = toxicity_score(ws)
        if score > cfg.theta:
            entries[word] = score
    return Lexicon(name=name, source="constructed", entries=entries)


def build_lexicon(
    train: Dataset,
    cfg: LexiconBuildConfig,
    tokenizer: Callable[[str], list[Token]] = tokenize,
    name: str = "constructed",
) -> Lexicon:
    """Induce a lexicon from span-annotated training data."""
    return lexicon_from_stats(count_word_stats(train, cfg.in_span_rule, tokenizer), cfg, name)


def load_wordlist(path: str | Path, name: str | None = None) -> Lexicon:
    """Load an off-the-shelf word list: one entry per line, optional
    tab-separated score column. Entries are lowercased and deduplicated
    (first score wins)."""
    path = Path(path)
    entries: dict[str, float | None] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            word, _, score_text = line.partition("\t")
            word = word.strip().lower()
            if not word:
                raise FormatError(f"{path}:{line_no}: blank entry")
            score: float | None = None
            if score_text.strip():
                try:
                    score = float(score_text)
                except ValueError:
                    raise FormatError(f"{path}:{line_no}: bad score {score_text!r}") from None
            if word not in entries:
                entries[word] = score
    if not entries:
        raise FormatError(f"{path}: word list is empty")
    return Lexicon(name=name or path.stem, source="wordlist", entries=entries)


def save_lexicon(lex: Lexicon, path: str | Path) -> None:
    """Write entries as ``word<TAB>score`` lines, best-scored first."""
    path = Path(path)
    def key(item: tuple[str, float | None]) -> tuple[float, str]:
        word, score = item
        return (-(score if score is not None else float("-inf")), word)
    with open(path, "w", encoding="utf-8") as handle:
        for word, score in sorted(lex.entries.items(), key=key):
            if score is None:
                handle.write(f"{word}\n")
            else:
                handle.write(f"{word}\t{score:.6f}\n")


def _fold(text: str) -> str:
    # Per-character lowercasing keeps offsets aligned with the original
    # text; characters whose lowercase form changes length are kept as-is.
    lowered = text.lower()
    if len(lowered) == len(text):
        return lowered
    return "".join(c if len(c.lower()) != 1 else c.lower() for c in text)


def predict(
    text: str,
    lex: Lexicon,
    mode: MatchMode = MatchMode(),
    tokenizer: Callable[[str], list[Token]] = tokenize,
) -> SpanSet:
    """Mark every occurrence of every lexicon entry in the text.

    Substring mode unions the character ranges of all occurrences in the
    (optionally case-folded) text. Word-boundary mode keeps only
    occurrences that start at a token start and end at a token end, so an
    entry cannot fire inside a longer word.
    """
    if not lex.entries:
        return SpanSet()
    haystack = _fold(text) if mode.case_fold else text
    hits = lex.automaton().find(haystack)
    if mode.mode is MatchKind.WORD_BOUNDARY:
        tokens = tokenizer(text)
        starts = {t.start for t in tokens}
        ends = {t.end for t in tokens}
        hits = (h for h in hits if h[0] in starts and h[1] in ends)
    return SpanSet(hits)
