"""Per-sample span scoring and dataset-level aggregation.

Scores compare a predicted offset set Y against a gold offset set T:

    precision = |Y ∩ T| / |Y|
    recall    = |Y ∩ T| / |T|
    f1        = 2 * precision * recall / (precision + recall)

``f1_plus`` extends f1 to the empty cases: it is 1 when both sets are
empty and 0 when exactly one of them is. When both sets are nonempty but
disjoint, precision, recall and f1 are all 0 rather than NaN.

Dataset-level reporting averages per-sample scores within the toxic and
non-toxic subsets separately and combines the two subset means with a
harmonic mean (``macro_f1p``), so corpora with different toxic ratios
stay comparable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, NamedTuple, Sequence

from .corpus import Dataset
from .exceptions import ToxspanError
from .spans import EMPTY_SPANSET, SpanSet

log = logging.getLogger("toxspan")


class DegenerateCase(Enum):
    BOTH_EMPTY = "both_empty"
    PRED_ONLY = "pred_only"
    GOLD_ONLY = "gold_only"
    NORMAL = "normal"


class SampleScore(NamedTuple):
    f1_plus: float
    precision: float
    recall: float
    degenerate_case: DegenerateCase


# Shared result objects for the constant-valued branches. score_sample is
# called once per (prediction, gold) pair in exhaustive verification runs,
# so avoiding needless allocation matters; the intersection walk is inlined
# below for the same reason.
_BOTH_EMPTY = SampleScore(1.0, 1.0, 1.0, DegenerateCase.BOTH_EMPTY)
_PRED_ONLY = SampleScore(0.0, 0.0, 0.0, DegenerateCase.PRED_ONLY)
_GOLD_ONLY = SampleScore(0.0, 0.0, 0.0, DegenerateCase.GOLD_ONLY)
_DISJOINT = SampleScore(0.0, 0.0, 0.0, DegenerateCase.NORMAL)
_NORMAL = DegenerateCase.NORMAL


def score_sample(pred: SpanSet, gold: SpanSet) -> SampleScore:
    """Score one prediction against one gold span set.

    Empty-case conventions: both sets empty scores 1.0 on all three
    measures; exactly one empty scores 0.0 on all three, with any 0/0
    ratio resolved to 0 so downstream ranking always has a value.
    """
    ny = pred.size
    nt = gold.size
    if nt == 0:
        return _BOTH_EMPTY if ny == 0 else _PRED_ONLY
    if ny == 0:
        return _GOLD_ONLY
    # two-pointer intersection size, same walk as spans.overlap; only the
    # advanced side is re-read each step
    inter = 0
    pred_ranges = pred.ranges
    gold_ranges = gold.ranges
    n_pred = len(pred_ranges)
    n_gold = len(gold_ranges)
    i = j = 0
    s1, e1 = pred_ranges[0]
    s2, e2 = gold_ranges[0]
    while True:
        lo = s1 if s1 > s2 else s2
        hi = e1 if e1 < e2 else e2
        if hi > lo:
            inter += hi - lo
        if e1 <= e2:
            i += 1
            if i == n_pred:
                break
            s1, e1 = pred_ranges[i]
        else:
            j += 1
            if j == n_gold:
                break
            s2, e2 = gold_ranges[j]
    if inter == 0:
        return _DISJOINT
    p = inter / ny
    r = inter / nt
    return SampleScore(2.0 * p * r / (p + r), p, r, _NORMAL)


def aggregate(scores: Sequence[SampleScore]) -> tuple[float, float, float] | None:
    """Arithmetic means of (f1_plus, precision, recall); None for no scores."""
    if not scores:
        return None
    n = len(scores)
    return (
        sum(s.f1_plus for s in scores) / n,
        sum(s.precision for s in scores) / n,
        sum(s.recall for s in scores) / n,
    )


def macro_f1p(toxic_f1p: float, nontoxic_f1p: float) -> float:
    """Harmonic mean of the two subset means; 0 when either side is 0."""
    total = toxic_f1p + nontoxic_f1p
    if total == 0:
        return 0.0
    return 2.0 * toxic_f1p * nontoxic_f1p / total


@dataclass
class EvalReport:
    """Subset means and their macro combination for one evaluation run.

    Fields are None when the corresponding subset is empty; ``macro_f1p``
    is None whenever either subset mean is unavailable.
    ``missing_predictions`` counts dataset ids that had no prediction and
    were scored as empty span sets.
    """

    toxic_f1p: float | None
    toxic_precision: float | None
    toxic_recall: float | None
    nontoxic_f1p: float | None
    macro_f1p: float | None
    n_toxic: int
    n_nontoxic: int
    missing_predictions: int

    COLUMNS = (
        "toxic_f1p",
        "toxic_precision",
        "toxic_recall",
        "nontoxic_f1p",
        "macro_f1p",
        "n_toxic",
        "n_nontoxic",
        "missing_predictions",
    )

    def to_row(self) -> dict[str, object]:
        """Flat record matching COLUMNS, suitable for a CSV row."""
        return {name: getattr(self, name) for name in self.COLUMNS}


def evaluate(dataset: Dataset, predictions: Mapping[str, SpanSet]) -> EvalReport:
    """Score predictions against every sample of the dataset.

    Ids missing from ``predictions`` are scored as empty predictions and
    counted in the report. A prediction for an id not in the dataset is an
    error: it usually means predictions and dataset are out of sync.
    """
    known = {sample.id for sample in dataset.samples}
    unknown = [pid for pid in predictions if pid not in known]
    if unknown:
        raise ToxspanError(
            f"predictions for unknown sample ids: {', '.join(sorted(unknown)[:5])}"
            + (" ..." if len(unknown) > 5 else "")
        )
    toxic_scores: list[SampleScore] = []
    nontoxic_scores: list[SampleScore] = []
    missing = 0
    for sample in dataset.samples:
        pred = predictions.get(sample.id)
        if pred is None:
            pred = EMPTY_SPANSET
            missing += 1
        score = score_sample(pred, sample.gold_spans)
        (toxic_scores if sample.toxic else nontoxic_scores).append(score)
    if missing:
        log.warning("%d of %d samples had no prediction; scored as empty", missing, len(dataset.samples))

    toxic_agg = aggregate(toxic_scores)
    nontoxic_agg = aggregate(nontoxic_scores)
    toxic_f1p, toxic_p, toxic_r = toxic_agg if toxic_agg else (None, None, None)
    nontoxic_f1p = nontoxic_agg[0] if nontoxic_agg else None
    macro = (
        macro_f1p(toxic_f1p, nontoxic_f1p)
        if toxic_f1p is not None and nontoxic_f1p is not None
        else None
    )
    return EvalReport(
        toxic_f1p=toxic_f1p,
        toxic_precision=toxic_p,
        toxic_recall=toxic_r,
        nontoxic_f1p=nontoxic_f1p,
        macro_f1p=macro,
        n_toxic=len(toxic_scores),
        n_nontoxic=len(nontoxic_scores),
        missing_predictions=missing,
    )
