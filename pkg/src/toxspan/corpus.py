"""Dataset ingestion, validation, balancing, and the canonical record store.

Two source formats are supported:

* a CSV with a ``spans`` column holding a bracketed list of toxic character
  offsets and a ``text`` column (all rows are toxic messages), and
* a JSON file of records carrying word tokens, per-annotator class labels,
  and per-annotator binary token rationale vectors.

Both are converted to one canonical JSON Lines format (see
:func:`write_canonical`) so every downstream tool reads a single schema.
All offsets are character offsets, counting Unicode scalar values.
"""

from __future__ import annotations

import ast
import csv
import json
import logging
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from .exceptions import IngestError, ToxspanError
from .spans import SpanSet

log = logging.getLogger("toxspan")

SPLITS = ("train", "dev", "test")

SCHEMA = "toxspan/1"


@dataclass
class Sample:
    """One message: text, binary toxicity label, and gold toxic spans."""

    id: str
    text: str
    toxic: bool
    gold_spans: SpanSet
    split: str

    def __post_init__(self) -> None:
        if self.split not in SPLITS:
            raise ValueError(f"sample {self.id!r}: unknown split {self.split!r}")
        if self.gold_spans.end() > len(self.text):
            raise ValueError(
                f"sample {self.id!r}: span offset {self.gold_spans.end() - 1} is outside "
                f"the text (length {len(self.text)})"
            )
        if not self.toxic and self.gold_spans:
            raise ValueError(f"sample {self.id!r}: non-toxic samples must not carry spans")


@dataclass
class Dataset:
    """An ordered collection of samples with unique ids."""

    name: str
    samples: list[Sample]
    provenance: str = ""

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for sample in self.samples:
            if sample.id in seen:
                raise ToxspanError(f"dataset {self.name!r}: duplicate sample id {sample.id!r}")
            seen.add(sample.id)

    def subset(self, split: str) -> "Dataset":
        """A new Dataset restricted to one split (same name and provenance)."""
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        return Dataset(
            name=self.name,
            samples=[s for s in self.samples if s.split == split],
            provenance=self.provenance,
        )

    def by_id(self) -> dict[str, Sample]:
        return {s.id: s for s in self.samples}

    def __len__(self) -> int:
        return len(self.samples)


@dataclass
class SplitFractions:
    """Fractions of a split: toxic with spans, toxic without, non-toxic."""

    toxic_with_span: float
    toxic_without_span: float
    nontoxic: float


@dataclass
class DatasetStats:
    """Per-split composition plus the mean in-span fraction of text.

    ``span_pct`` is the mean over all samples of the fraction of the
    sample's characters covered by gold spans (empty texts contribute 0).
    Splits with no samples are simply absent from ``splits``.
    """

    splits: dict[str, SplitFractions]
    span_pct: float


def compute_stats(dataset: Dataset) -> DatasetStats:
    splits: dict[str, SplitFractions] = {}
    for split in SPLITS:
        members = [s for s in dataset.samples if s.split == split]
        if not members:
            continue
        n = len(members)
        with_span = sum(1 for s in members if s.toxic and s.gold_spans)
        without_span = sum(1 for s in members if s.toxic and not s.gold_spans)
        nontoxic = n - with_span - without_span
        splits[split] = SplitFractions(with_span / n, without_span / n, nontoxic / n)
    fractions = [
        s.gold_spans.size / len(s.text) if s.text else 0.0 for s in dataset.samples
    ]
    span_pct = sum(fractions) / len(fractions) if fractions else 0.0
    return DatasetStats(splits=splits, span_pct=span_pct)


def _parse_offset_list(raw: str, row_num: int) -> list[int]:
    try:
        value = ast.literal_eval(raw.strip())
    except (ValueError, SyntaxError) as exc:
        raise IngestError(f"row {row_num}: malformed offset list {raw!r}: {exc}") from None
    if not isinstance(value, list) or not all(isinstance(v, int) for v in value):
        raise IngestError(f"row {row_num}: offset column must be a list of integers, got {raw!r}")
    return value


def ingest_semeval(path: str | Path, split: str, name: str | None = None) -> Dataset:
    """Read a spans+text CSV where every row is a toxic message.

    The ``spans`` column holds a bracketed list of toxic character offsets
    into ``text``. Offsets are converted to canonical ranges. Rows take
    their id from an ``id`` column when present, otherwise ``{split}-{n}``
    with n counting data rows from 0.
    """
    path = Path(path)
    samples: list[Sample] = []
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or not {"spans", "text"} <= set(reader.fieldnames):
            raise IngestError(f"{path}: expected columns 'spans' and 'text', found {reader.fieldnames}")
        for i, row in enumerate(reader):
            offsets = _parse_offset_list(row["spans"], i + 1)
            text = row["text"]
            bad = [off for off in offsets if off < 0 or off >= len(text)]
            if bad:
                raise IngestError(
                    f"row {i + 1}: offset {bad[0]} outside text of length {len(text)}"
                )
            samples.append(
                Sample(
                    id=row.get("id") or f"{split}-{i}",
                    text=text,
                    toxic=True,
                    gold_spans=SpanSet.from_offsets(offsets),
                    split=split,
                )
            )
    return Dataset(
        name=name or path.stem,
        samples=samples,
        provenance=f"spans-csv:{path.name}",
    )


_TOXIC_LABELS = {"hatespeech", "offensive"}
_NONTOXIC_LABELS = {"normal"}


def ingest_hatexplain(path: str | Path, split: str, name: str | None = None) -> Dataset:
    """Read token/rationale records and reconstruct character-level samples.

    The file holds either a JSON object mapping id to record or a JSON list
    of records with a ``post_id`` key. Each record carries ``post_tokens``,
    annotator labels under ``annotators``, and a ``rationales`` list of
    per-annotator 0/1 vectors over the tokens.

    The message label is the majority vote over annotator labels after
    mapping hatespeech and offensive to toxic and normal to non-toxic;
    records with a tied vote are dropped with a warning. Text is rebuilt by
    joining tokens with single spaces, which fixes the character coordinate
    system. A token is in-span when the mean of the rationale bits for it
    is at least 0.5; gold spans are the union of in-span token ranges.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    if isinstance(data, dict):
        records = [(rid, rec) for rid, rec in data.items()]
    elif isinstance(data, list):
        records = [(rec.get("post_id"), rec) for rec in data]
    else:
        raise IngestError(f"{path}: expected a JSON object or list of records")

    samples: list[Sample] = []
    dropped = 0
    for rid, rec in records:
        if not rid:
            raise IngestError(f"{path}: record without a post_id")
        tokens = rec.get("post_tokens")
        if not isinstance(tokens, list):
            raise IngestError(f"record {rid!r}: missing post_tokens")
        labels = [ann.get("label") for ann in rec.get("annotators", [])]
        votes_toxic = sum(1 for lab in labels if lab in _TOXIC_LABELS)
        votes_nontoxic = sum(1 for lab in labels if lab in _NONTOXIC_LABELS)
        unknown = [lab for lab in labels if lab not in _TOXIC_LABELS | _NONTOXIC_LABELS]
        if unknown:
            raise IngestError(f"record {rid!r}: unknown annotator label {unknown[0]!r}")
        if votes_toxic == votes_nontoxic:
            log.warning("record %r: no majority label (%d vs %d); dropped", rid, votes_toxic, votes_nontoxic)
            dropped += 1
            continue
        toxic = votes_toxic > votes_nontoxic

        text = " ".join(tokens)
        token_ranges: list[tuple[int, int]] = []
        pos = 0
        for tok in tokens:
            token_ranges.append((pos, pos + len(tok)))
            pos += len(tok) + 1

        gold = SpanSet()
        rationales = rec.get("rationales") or []
        if toxic and rationales:
            for vec in rationales:
                if len(vec) != len(tokens):
                    raise IngestError(
                        f"record {rid!r}: rationale vector length {len(vec)} != token count {len(tokens)}"
                    )
            chosen = [
                token_ranges[t]
                for t in range(len(tokens))
                if sum(vec[t] for vec in rationales) / len(rationales) >= 0.5
            ]
            gold = SpanSet(chosen)
        samples.append(Sample(id=str(rid), text=text, toxic=toxic, gold_spans=gold, split=split))
    if dropped:
        log.warning("%s: dropped %d records with tied votes", path.name, dropped)
    return Dataset(
        name=name or path.stem,
        samples=samples,
        provenance=f"token-rationale-json:{path.name}",
    )


def merge_datasets(parts: Iterable[Dataset], name: str, provenance: str = "") -> Dataset:
    """Concatenate datasets (e.g. per-split ingests) into one."""
    samples: list[Sample] = []
    sources = []
    for part in parts:
        samples.extend(part.samples)
        sources.append(part.provenance or part.name)
    return Dataset(name=name, samples=samples, provenance=provenance or " + ".join(sources))


def balance_binary(dataset: Dataset, pool: Dataset, seed: int) -> Dataset:
    """Top up each split with non-toxic pool samples until toxic:non-toxic is 1:1.

    Pool samples must all be non-toxic with empty spans. Draws are uniform
    without replacement from a single seeded shuffle of the pool, assigned
    to needy splits in canonical split order; a drawn sample adopts the
    split it fills. Splits that already have at least as many non-toxic as
    toxic samples are left alone.
    """
    for sample in pool.samples:
        if sample.toxic or sample.gold_spans:
            raise ToxspanError(f"pool sample {sample.id!r} is not a span-free non-toxic sample")
    existing_ids = {s.id for s in dataset.samples}
    clash = [s.id for s in pool.samples if s.id in existing_ids]
    if clash:
        raise ToxspanError(f"pool sample id {clash[0]!r} already present in dataset {dataset.name!r}")

    shortfall: dict[str, int] = {}
    for split in SPLITS:
        members = [s for s in dataset.samples if s.split == split]
        toxic = sum(1 for s in members if s.toxic)
        nontoxic = len(members) - toxic
        needed = max(0, toxic - nontoxic)
        if needed:
            shortfall[split] = needed

    total_needed = sum(shortfall.values())
    if total_needed == 0:
        return dataset
    if total_needed > len(pool.samples):
        detail = ", ".join(f"{split}: {n}" for split, n in shortfall.items())
        raise ToxspanError(
            f"pool of {len(pool.samples)} cannot cover shortfall of {total_needed} ({detail})"
        )

    order = list(pool.samples)
    random.Random(seed).shuffle(order)
    added: list[Sample] = []
    cursor = 0
    for split in SPLITS:
        for _ in range(shortfall.get(split, 0)):
            drawn = order[cursor]
            cursor += 1
            added.append(replace(drawn, split=split))
    return Dataset(
        name=dataset.name,
        samples=dataset.samples + added,
        provenance=dataset.provenance,
    )


def write_canonical(dataset: Dataset, path: str | Path) -> None:
    """Write the dataset as schema-tagged JSON Lines (lossless round-trip)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as handle:
        header = {"schema": SCHEMA, "name": dataset.name, "provenance": dataset.provenance}
        handle.write(json.dumps(header, ensure_ascii=False) + "\n")
        for sample in dataset.samples:
            record = {
                "id": sample.id,
                "text": sample.text,
                "toxic": sample.toxic,
                "spans": [[s, e] for s, e in sample.gold_spans],
                "split": sample.split,
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_canonical(path: str | Path) -> Dataset:
    """Read a dataset written by :func:`write_canonical`."""
    path = Path(path)
    with open(path, encoding="utf-8") as handle:
        first = handle.readline()
        if not first.strip():
            raise ToxspanError(f"{path}: empty file, expected a schema header")
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise ToxspanError(f"{path}: unreadable header line: {exc}") from None
        found = header.get("schema") if isinstance(header, dict) else None
        if found != SCHEMA:
            raise ToxspanError(f"{path}: expected schema {SCHEMA!r}, found {found!r}")
        samples = []
        for line_no, line in enumerate(handle, start=2):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ToxspanError(f"{path}:{line_no}: unreadable record: {exc}") from None
            try:
                samples.append(
                    Sample(
                        id=rec["id"],
                        text=rec["text"],
                        toxic=rec["toxic"],
                        gold_spans=SpanSet((int(s), int(e)) for s, e in rec["spans"]),
                        split=rec["split"],
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ToxspanError(f"{path}:{line_no}: invalid record: {exc}") from None
    return Dataset(
        name=header.get("name", path.stem),
        samples=samples,
        provenance=header.get("provenance", ""),
    )
