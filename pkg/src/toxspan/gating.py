"""Message-level gating of span predictions, plus prediction file formats.

In the "inferred" evaluation setting a binary toxicity verdict decides
whether a sample keeps its predicted spans: a non-toxic verdict forces an
empty prediction, propagating message-level errors into span scores. The
"oracle" setting applies no gate at all.

This module also reads and writes the two external prediction formats:
binary verdicts (``{"id": ..., "toxic": ...}`` per line) and span
predictions (``{"id": ..., "spans": [[start, end], ...]}`` per line).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, NamedTuple

from .corpus import Dataset
from .exceptions import FormatError, ToxspanError
from .lexicon import Lexicon, MatchMode, predict
from .spans import EMPTY_SPANSET, SpanSet


class BinaryPrediction(NamedTuple):
    sample_id: str
    toxic: bool


def load_binary(path: str | Path) -> dict[str, BinaryPrediction]:
    """Read binary verdicts; duplicate ids are an error."""
    path = Path(path)
    out: dict[str, BinaryPrediction] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                sid = rec["id"]
                toxic = rec["toxic"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise FormatError(f"{path}:{line_no}: invalid record: {exc}") from None
            if not isinstance(toxic, bool):
                raise FormatError(f"{path}:{line_no}: 'toxic' must be a boolean")
            if sid in out:
                raise FormatError(f"{path}:{line_no}: duplicate sample id {sid!r}")
            out[sid] = BinaryPrediction(sid, toxic)
    return out


def write_binary(preds: Mapping[str, BinaryPrediction], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for sid, pred in preds.items():
            handle.write(json.dumps({"id": sid, "toxic": pred.toxic}, ensure_ascii=False) + "\n")


def load_span_predictions(path: str | Path, dataset: Dataset | None = None) -> dict[str, SpanSet]:
    """Read span predictions; optionally validate against a dataset."""
    path = Path(path)
    by_sample = dataset.by_id() if dataset is not None else None
    out: dict[str, SpanSet] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                sid = rec["id"]
                spans = SpanSet((int(s), int(e)) for s, e in rec["spans"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path}:{line_no}: invalid record: {exc}") from None
            if sid in out:
                raise FormatError(f"{path}:{line_no}: duplicate sample id {sid!r}")
            if by_sample is not None:
                sample = by_sample.get(sid)
                if sample is None:
                    raise FormatError(f"{path}:{line_no}: unknown sample id {sid!r}")
                if spans.end() > len(sample.text):
                    raise FormatError(
                        f"{path}:{line_no}: sample {sid!r} span end {spans.end()} exceeds "
                        f"text length {len(sample.text)}"
                    )
            out[sid] = spans
    return out


def write_span_predictions(preds: Mapping[str, SpanSet], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for sid, spans in preds.items():
            rec = {"id": sid, "spans": [[s, e] for s, e in spans]}
            handle.write(json.dumps(rec, ensure_ascii=False) + "\n")


def gate(
    spans: Mapping[str, SpanSet],
    binary: Mapping[str, BinaryPrediction],
) -> dict[str, SpanSet]:
    """Empty every prediction whose binary verdict is non-toxic.

    Idempotent, never adds offsets. Every id in ``spans`` must have a
    verdict.
    """
    out: dict[str, SpanSet] = {}
    for sid, pred in spans.items():
        verdict = binary.get(sid)
        if verdict is None:
            raise ToxspanError(f"no binary prediction for sample id {sid!r}")
        out[sid] = pred if verdict.toxic else EMPTY_SPANSET
    return out


def lexicon_binary(
    dataset: Dataset,
    lex: Lexicon,
    mode: MatchMode = MatchMode(),
) -> dict[str, BinaryPrediction]:
    """Dependency-free stand-in classifier: toxic iff the lexicon matches.

    By construction, gating a lexicon's own span predictions with these
    verdicts changes nothing.
    """
    return {
        s.id: BinaryPrediction(s.id, bool(predict(s.text, lex, mode)))
        for s in dataset.samples
    }
