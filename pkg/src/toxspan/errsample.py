"""Error-analysis pipeline: select, stratify, sample, and re-weight errors.

Erroneous predictions (per-sample f1_plus below 1) are stratified into
five categories: four precision/recall quadrants split at the medians of
the non-empty error population (values up to and including the median
count as low), plus a dedicated category for empty predictions, whose
precision and recall are not informative. A fixed number of records is
sampled per category for human annotation; when a category runs short,
the shortfall is drawn evenly from the remaining categories.

Class labels themselves are human judgments. The sheet ships two
machine-checkable hint flags (a predicted span lying strictly inside a
token; a predicted span stopping before its token's end) as
pre-annotations, and an ``annotated`` column so an annotated record with
no applicable class is distinguishable from an untouched one. After
annotation, class prevalence is re-weighted by the true category sizes so
the stratified sample does not distort the reported rates.
"""

from __future__ import annotations

import csv
import json
import logging
import random
import statistics
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping

from .corpus import Dataset
from .exceptions import FormatError, ToxspanError
from .metrics import score_sample
from .spans import EMPTY_SPANSET, SpanSet, tokenize

log = logging.getLogger("toxspan")


class ErrorCategory(Enum):
    HIGH_P_HIGH_R = "P_high_R_high"
    HIGH_P_LOW_R = "P_high_R_low"
    LOW_P_HIGH_R = "P_low_R_high"
    LOW_P_LOW_R = "P_low_R_low"
    EMPTY = "empty"


CATEGORY_ORDER = tuple(ErrorCategory)

ERROR_CLASSES = (
    "doubt-label-missing",
    "doubt-label-toomany",
    "FP-subword-toxic",
    "FP-subword-nontoxic",
    "FN-subword-morph",
    "FN-subword",
    "FN-explicit",
    "FN-explicit-spelling",
    "FN-implicit",
    "FN-phrase-part",
    "FN-whitespace",
    "FP-target",
    "FP-pos",
)

# Aggregates are computed per record: a record counts for the aggregate
# when any member class applies to it.
AGGREGATE_CLASSES: dict[str, tuple[str, ...]] = {
    "*-subword-*": tuple(c for c in ERROR_CLASSES if "subword" in c),
    "FN-*": tuple(c for c in ERROR_CLASSES if c.startswith("FN-")),
    "FP-*": tuple(c for c in ERROR_CLASSES if c.startswith("FP-")),
}


@dataclass
class ErrorRecord:
    """One erroneous prediction with its per-sample scores attached.

    ``recall_conventional`` marks records whose gold set is empty: their
    recall is reported as 0 by convention so they can be ranked at all.
    """

    sample_id: str
    method: str
    text: str
    precision: float
    recall: float
    f1_plus: float
    pred: SpanSet
    gold: SpanSet
    recall_conventional: bool
    category: ErrorCategory | None = None


def select_errors(
    dataset: Dataset,
    predictions: Mapping[str, SpanSet],
    method: str = "",
) -> list[ErrorRecord]:
    """All samples scoring below 1, with per-sample scores attached.

    Missing predictions count as empty span sets, mirroring evaluation.
    """
    known = {s.id for s in dataset.samples}
    unknown = sorted(set(predictions) - known)
    if unknown:
        raise ToxspanError(f"predictions for unknown sample ids: {', '.join(unknown[:5])}")
    errors: list[ErrorRecord] = []
    for sample in dataset.samples:
        pred = predictions.get(sample.id, EMPTY_SPANSET)
        score = score_sample(pred, sample.gold_spans)
        if score.f1_plus >= 1.0:
            continue
        errors.append(
            ErrorRecord(
                sample_id=sample.id,
                method=method,
                text=sample.text,
                precision=score.precision,
                recall=score.recall,
                f1_plus=score.f1_plus,
                pred=pred,
                gold=sample.gold_spans,
                recall_conventional=bool(pred) and not sample.gold_spans,
            )
        )
    return errors


def categorize(errors: list[ErrorRecord]) -> tuple[list[ErrorRecord], dict[ErrorCategory, int]]:
    """Assign every record to exactly one category; return category counts.

    Medians are computed over the records with nonempty predictions only.
    A value at or below its median ranks low, above it ranks high.
    """
    nonempty = [e for e in errors if e.pred]
    if nonempty:
        p_median = statistics.median(e.precision for e in nonempty)
        r_median = statistics.median(e.recall for e in nonempty)
    counts = {cat: 0 for cat in CATEGORY_ORDER}
    for record in errors:
        if not record.pred:
            record.category = ErrorCategory.EMPTY
        else:
            p_high = record.precision > p_median
            r_high = record.recall > r_median
            if p_high and r_high:
                record.category = ErrorCategory.HIGH_P_HIGH_R
            elif p_high:
                record.category = ErrorCategory.HIGH_P_LOW_R
            elif r_high:
                record.category = ErrorCategory.LOW_P_HIGH_R
            else:
                record.category = ErrorCategory.LOW_P_LOW_R
        counts[record.category] += 1
    return errors, counts


@dataclass
class SheetEntry:
    record: ErrorRecord
    classes: set[str] = field(default_factory=set)
    annotated: bool = False
    auto_subword_pred: bool = False
    auto_missing_suffix: bool = False
    # Size of this record's category in its method's full error population;
    # carried per row so concatenated multi-method sheets stay consistent.
    category_total: int = 0


@dataclass
class AnnotatedSheet:
    entries: list[SheetEntry]
    category_counts: dict[ErrorCategory, int]
    warning: str | None = None


def _auto_flags(record: ErrorRecord) -> tuple[bool, bool]:
    tokens = tokenize(record.text)
    inside = False
    missing_suffix = False
    for start, end in record.pred:
        for tok in tokens:
            if tok.start <= start and end <= tok.end and (start > tok.start or end < tok.end):
                inside = True
            if start == tok.start and end < tok.end:
                missing_suffix = True
    return inside, missing_suffix


def sample_sheet(
    categorized: list[ErrorRecord],
    per_category: int = 15,
    seed: int = 0,
) -> AnnotatedSheet:
    """Draw a seeded stratified sample of errors for annotation.

    Each category contributes ``per_category`` records when it can. Any
    shortfall is redistributed evenly over the categories that still have
    unsampled records, remainder going to the earliest categories in
    declaration order, until the requested total is reached or every
    record is in the sheet.
    """
    if per_category < 1:
        raise ValueError(f"per_category must be >= 1, got {per_category}")
    if any(r.category is None for r in categorized):
        raise ToxspanError("records must be categorized before sampling")
    groups: dict[ErrorCategory, list[ErrorRecord]] = {cat: [] for cat in CATEGORY_ORDER}
    for record in categorized:
        groups[record.category].append(record)

    rng = random.Random(seed)
    chosen: dict[ErrorCategory, set[int]] = {cat: set() for cat in CATEGORY_ORDER}

    def draw(cat: ErrorCategory, want: int) -> int:
        pool = [i for i in range(len(groups[cat])) if i not in chosen[cat]]
        take = min(want, len(pool))
        if take:
            chosen[cat].update(rng.sample(pool, take))
        return take

    requested = per_category * len(CATEGORY_ORDER)
    got = sum(draw(cat, per_category) for cat in CATEGORY_ORDER)

    shortfall = requested - got
    while shortfall > 0:
        open_cats = [cat for cat in CATEGORY_ORDER if len(chosen[cat]) < len(groups[cat])]
        if not open_cats:
            break
        base, extra = divmod(shortfall, len(open_cats))
        for i, cat in enumerate(open_cats):
            want = base + (1 if i < extra else 0)
            shortfall -= draw(cat, want)

    warning = None
    total = sum(len(v) for v in chosen.values())
    if total < requested:
        warning = f"only {total} errors available for a requested sample of {requested}"
        log.warning("%s", warning)

    counts = {cat: len(groups[cat]) for cat in CATEGORY_ORDER}
    entries: list[SheetEntry] = []
    for cat in CATEGORY_ORDER:
        for i in sorted(chosen[cat]):
            record = groups[cat][i]
            inside, missing_suffix = _auto_flags(record)
            entries.append(
                SheetEntry(
                    record=record,
                    auto_subword_pred=inside,
                    auto_missing_suffix=missing_suffix,
                    category_total=counts[cat],
                )
            )
    return AnnotatedSheet(entries=entries, category_counts=counts, warning=warning)


def reweight_prevalence(
    sheet: AnnotatedSheet,
    category_counts: Mapping[ErrorCategory, int] | None = None,
) -> dict[str, float]:
    """Category-weighted prevalence of every class and aggregate.

    Each category's within-sample class rate is weighted by the category's
    share of all errors, undoing the stratification of the sample. Every
    entry must be annotated first.
    """
    counts = dict(category_counts if category_counts is not None else sheet.category_counts)
    unannotated = [e.record.sample_id for e in sheet.entries if not e.annotated]
    if unannotated:
        raise ToxspanError(
            f"sheet has {len(unannotated)} unannotated records: {', '.join(unannotated[:5])}"
            + (" ..." if len(unannotated) > 5 else "")
        )
    total = sum(counts.values())
    if total == 0:
        raise ToxspanError("no errors to re-weight")

    by_category: dict[ErrorCategory, list[SheetEntry]] = {cat: [] for cat in CATEGORY_ORDER}
    for entry in sheet.entries:
        by_category[entry.record.category].append(entry)

    def present(entry: SheetEntry, name: str) -> bool:
        members = AGGREGATE_CLASSES.get(name)
        if members is None:
            return name in entry.classes
        return any(m in entry.classes for m in members)

    prevalence: dict[str, float] = {}
    for name in ERROR_CLASSES + tuple(AGGREGATE_CLASSES):
        value = 0.0
        for cat in CATEGORY_ORDER:
            count = counts.get(cat, 0)
            if count == 0:
                continue
            entries = by_category[cat]
            if not entries:
                raise ToxspanError(
                    f"category {cat.value!r} holds {count} errors but no sampled records"
                )
            rate = sum(1 for e in entries if present(e, name)) / len(entries)
            value += rate * count / total
        prevalence[name] = value
    return prevalence


SHEET_COLUMNS = (
    "method",
    "id",
    "text",
    "gold_spans",
    "pred_spans",
    "category",
    "category_total",
    "precision",
    "recall",
    "f1_plus",
    "recall_conventional",
    "auto_subword_pred",
    "auto_missing_suffix",
    "annotated",
) + ERROR_CLASSES

_TRUTHY = {"1", "x", "y", "yes", "true"}


def _flag(value: str | None) -> bool:
    return bool(value) and value.strip().lower() in _TRUTHY


def write_sheet(sheet: AnnotatedSheet, path: str | Path) -> None:
    """Write the annotation sheet as CSV, one empty column per class."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SHEET_COLUMNS)
        for entry in sheet.entries:
            r = entry.record
            row = [
                r.method,
                r.sample_id,
                r.text,
                json.dumps([[s, e] for s, e in r.gold]),
                json.dumps([[s, e] for s, e in r.pred]),
                r.category.value,
                entry.category_total,
                f"{r.precision:.6f}",
                f"{r.recall:.6f}",
                f"{r.f1_plus:.6f}",
                "1" if r.recall_conventional else "",
                "1" if entry.auto_subword_pred else "",
                "1" if entry.auto_missing_suffix else "",
                "1" if entry.annotated else "",
            ]
            row.extend("1" if c in entry.classes else "" for c in ERROR_CLASSES)
            writer.writerow(row)


def read_sheet(path: str | Path) -> AnnotatedSheet:
    """Read a (possibly annotated) sheet back, recovering category counts."""
    path = Path(path)
    entries: list[SheetEntry] = []
    counts: dict[ErrorCategory, int] = {}
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        missing = set(SHEET_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise FormatError(f"{path}: sheet is missing columns: {', '.join(sorted(missing))}")
        for row in reader:
            try:
                category = ErrorCategory(row["category"])
                record = ErrorRecord(
                    sample_id=row["id"],
                    method=row["method"],
                    text=row["text"],
                    precision=float(row["precision"]),
                    recall=float(row["recall"]),
                    f1_plus=float(row["f1_plus"]),
                    pred=SpanSet((int(s), int(e)) for s, e in json.loads(row["pred_spans"])),
                    gold=SpanSet((int(s), int(e)) for s, e in json.loads(row["gold_spans"])),
                    recall_conventional=_flag(row["recall_conventional"]),
                    category=category,
                )
                category_total = int(row["category_total"])
                counts[category] = category_total
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                raise FormatError(f"{path}: bad sheet row for id {row.get('id')!r}: {exc}") from None
            entries.append(
                SheetEntry(
                    record=record,
                    classes={c for c in ERROR_CLASSES if _flag(row[c])},
                    annotated=_flag(row["annotated"]),
                    auto_subword_pred=_flag(row["auto_subword_pred"]),
                    auto_missing_suffix=_flag(row["auto_missing_suffix"]),
                    category_total=category_total,
                )
            )
    for cat in CATEGORY_ORDER:
        counts.setdefault(cat, 0)
    return AnnotatedSheet(entries=entries, category_counts=counts)


def prevalence_by_method(sheet: AnnotatedSheet) -> dict[str, dict[str, float]]:
    """Split a sheet by method and re-weight each method separately.

    Category sizes come from the per-row totals, so sheets concatenated
    from several per-method sampling runs keep each method's own counts.
    """
    methods: dict[str, list[SheetEntry]] = {}
    for entry in sheet.entries:
        methods.setdefault(entry.record.method, []).append(entry)
    out: dict[str, dict[str, float]] = {}
    for method, entries in methods.items():
        counts: dict[ErrorCategory, int] = {}
        for entry in entries:
            cat = entry.record.category
            if cat in counts and counts[cat] != entry.category_total:
                raise FormatError(
                    f"method {method!r}: rows disagree on the size of category {cat.value!r}"
                )
            counts[cat] = entry.category_total
        sub = AnnotatedSheet(entries=entries, category_counts=counts)
        out[method] = reweight_prevalence(sub)
    return out


def write_prevalence_csv(prevalence: Mapping[str, Mapping[str, float]], path: str | Path) -> None:
    """Classes as rows, methods as columns."""
    methods = list(prevalence)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["class"] + methods)
        for name in ERROR_CLASSES + tuple(AGGREGATE_CLASSES):
            writer.writerow([name] + [f"{prevalence[m][name]:.6f}" for m in methods])
