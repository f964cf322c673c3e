from __future__ import annotations

from pathlib import Path

import pytest

from toxspan.corpus import Dataset, Sample
from toxspan.spans import SpanSet

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


def make_sample(
    sid: str,
    text: str,
    spans: list[tuple[int, int]] | None = None,
    toxic: bool | None = None,
    split: str = "train",
) -> Sample:
    span_set = SpanSet(spans or [])
    if toxic is None:
        toxic = bool(span_set)
    return Sample(id=sid, text=text, toxic=toxic, gold_spans=span_set, split=split)


def make_dataset(samples: list[Sample], name: str = "tiny") -> Dataset:
    return Dataset(name=name, samples=samples, provenance="test")
