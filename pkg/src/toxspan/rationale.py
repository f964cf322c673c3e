"""Span prediction from externally computed per-token importance scores.

Token scores come from a score file (one JSON object per line, see
:func:`load_scores`); how they were produced is out of scope here. The
pipeline rescales each sample's scores to sum to 1 and predicts the
character ranges of all tokens whose rescaled score is strictly above a
threshold.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple

from .corpus import Dataset
from .exceptions import FormatError
from .spans import SpanSet

log = logging.getLogger("toxspan")

# Sums whose magnitude is at or below this are treated as zero when rescaling.
DEGENERATE_SUM = 1e-12


class TokenScore(NamedTuple):
    start: int
    end: int
    score: float


@dataclass(frozen=True)
class TokenScores:
    """Per-token scores for one sample, ordered and non-overlapping.

    ``degenerate`` marks samples whose scores could not be rescaled
    because they summed to (nearly) zero; their scores were zeroed.
    """

    sample_id: str
    method: str
    tokens: tuple[TokenScore, ...]
    degenerate: bool = False

    def __post_init__(self) -> None:
        prev_end = 0
        for tok in self.tokens:
            if tok.start < 0 or tok.start >= tok.end:
                raise ValueError(f"sample {self.sample_id!r}: bad token range [{tok.start}, {tok.end})")
            if tok.start < prev_end:
                raise ValueError(
                    f"sample {self.sample_id!r}: token ranges must be sorted and non-overlapping"
                )
            prev_end = tok.end


@dataclass(frozen=True)
class ThresholdConfig:
    tau: float


def load_scores(path: str | Path, dataset: Dataset | None = None) -> dict[str, TokenScores]:
    """Read a score file; optionally validate ids and ranges against a dataset.

    Format: one JSON object per line with keys ``id``, ``method``, and
    ``tokens`` as a list of ``[start, end, score]`` triples.
    """
    path = Path(path)
    by_sample = dataset.by_id() if dataset is not None else None
    out: dict[str, TokenScores] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{line_no}: unreadable record: {exc}") from None
            try:
                sid = rec["id"]
                tokens = tuple(TokenScore(int(s), int(e), float(v)) for s, e, v in rec["tokens"])
                scores = TokenScores(sample_id=sid, method=rec.get("method", ""), tokens=tokens)
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path}:{line_no}: {exc}") from None
            if sid in out:
                raise FormatError(f"{path}:{line_no}: duplicate sample id {sid!r}")
            if by_sample is not None:
                sample = by_sample.get(sid)
                if sample is None:
                    raise FormatError(f"{path}:{line_no}: unknown sample id {sid!r}")
                if tokens and tokens[-1].end > len(sample.text):
                    raise FormatError(
                        f"{path}:{line_no}: sample {sid!r} token end {tokens[-1].end} exceeds "
                        f"text length {len(sample.text)}"
                    )
            out[sid] = scores
    return out


def write_scores(scores: dict[str, TokenScores], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for sid, ts in scores.items():
            rec = {
                "id": sid,
                "method": ts.method,
                "tokens": [[t.start, t.end, t.score] for t in ts.tokens],
            }
            handle.write(json.dumps(rec, ensure_ascii=False) + "\n")


def normalize(scores: TokenScores) -> TokenScores:
    """Rescale scores to sum to 1; zero them out when the sum is degenerate."""
    total = sum(t.score for t in scores.tokens)
    if abs(total) <= DEGENERATE_SUM:
        if scores.tokens:
            log.warning("sample %r: score sum %.3g is degenerate; scores zeroed", scores.sample_id, total)
        return replace(
            scores,
            tokens=tuple(TokenScore(t.start, t.end, 0.0) for t in scores.tokens),
            degenerate=True,
        )
    return replace(
        scores,
        tokens=tuple(TokenScore(t.start, t.end, t.score / total) for t in scores.tokens),
    )


def threshold_to_spans(scores: TokenScores, cfg: ThresholdConfig) -> SpanSet:
    """Union of the character ranges of tokens scoring strictly above tau."""
    return SpanSet((t.start, t.end) for t in scores.tokens if t.score > cfg.tau)
