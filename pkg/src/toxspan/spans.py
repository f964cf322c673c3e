"""Character-span algebra: canonical span sets, gap merging, and tokenization.

Spans are half-open character ranges ``[start, end)`` over a text. A
:class:`SpanSet` is the canonical carrier for "which characters are toxic":
it is equivalent to a set of integer offsets, stored compactly as sorted,
disjoint, non-adjacent ranges.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple


class Token(NamedTuple):
    surface: str
    start: int
    end: int


# Maximal runs of alphanumeric characters or apostrophes; everything else
# separates tokens. Underscore is a separator.
_TOKEN_RE = re.compile(r"(?:[^\W_]|')+")


def tokenize(text: str) -> list[Token]:
    """Split text into offset-carrying word tokens.

    The rule is deliberately simple and documented so results can be
    reproduced: a token is a maximal run of alphanumeric characters or
    apostrophes. Functions that consume tokens accept a ``tokenizer``
    callable, so this strategy can be swapped out.

    >>> tokenize("jerk face")
    [Token(surface='jerk', start=0, end=4), Token(surface='face', start=5, end=9)]
    """
    return [Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


class SpanSet:
    """An immutable set of character offsets stored as half-open ranges.

    Construction canonicalizes the input: ranges are sorted and any
    overlapping or touching ranges are coalesced, so two SpanSets covering
    the same offsets always compare equal. ``size`` is the number of
    offsets covered.
    """

    __slots__ = ("ranges", "size")

    ranges: tuple[tuple[int, int], ...]
    size: int

    def __init__(self, ranges: Iterable[tuple[int, int]] = ()):
        merged: list[list[int]] = []
        for start, end in sorted(ranges):
            if not isinstance(start, int) or not isinstance(end, int):
                raise ValueError(f"span bounds must be integers, got ({start!r}, {end!r})")
            if start < 0:
                raise ValueError(f"negative span start: {start}")
            if start >= end:
                raise ValueError(f"empty or inverted span: [{start}, {end})")
            if merged and start <= merged[-1][1]:
                if end > merged[-1][1]:
                    merged[-1][1] = end
            else:
                merged.append([start, end])
        object.__setattr__(self, "ranges", tuple((s, e) for s, e in merged))
        object.__setattr__(self, "size", sum(e - s for s, e in merged))

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("SpanSet is immutable")

    @classmethod
    def from_offsets(cls, offsets: Iterable[int]) -> "SpanSet":
        """Build the canonical SpanSet covering exactly the given offsets."""
        ranges = []
        run_start = None
        prev = None
        for off in sorted(set(offsets)):
            if not isinstance(off, int):
                raise ValueError(f"offsets must be integers, got {off!r}")
            if off < 0:
                raise ValueError(f"negative offset: {off}")
            if run_start is None:
                run_start = prev = off
            elif off == prev + 1:
                prev = off
            else:
                ranges.append((run_start, prev + 1))
                run_start = prev = off
        if run_start is not None:
            ranges.append((run_start, prev + 1))
        return cls(ranges)

    def to_offsets(self) -> set[int]:
        """The explicit offset set this SpanSet covers."""
        out: set[int] = set()
        for start, end in self.ranges:
            out.update(range(start, end))
        return out

    def __bool__(self) -> bool:
        return bool(self.ranges)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.ranges)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, SpanSet):
            return self.ranges == other.ranges
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.ranges)

    def __repr__(self) -> str:
        return f"SpanSet({list(self.ranges)!r})"

    def end(self) -> int:
        """One past the last covered offset (0 when empty)."""
        return self.ranges[-1][1] if self.ranges else 0


EMPTY_SPANSET = SpanSet()


@dataclass(frozen=True)
class MergeConfig:
    """Post-processing knob: join predicted spans at most ``fill_chars`` apart.

    The gap between two consecutive ranges is ``next.start - prev.end``,
    so ``fill_chars=1`` joins spans separated by exactly one character
    (typically a space). A very large value such as 9999 joins everything
    into a single span.
    """

    fill_chars: int = 0

    def __post_init__(self) -> None:
        if self.fill_chars < 0:
            raise ValueError(f"fill_chars must be >= 0, got {self.fill_chars}")


def merge_spans(spans: SpanSet, cfg: MergeConfig) -> SpanSet:
    """Merge consecutive ranges whose gap is at most ``cfg.fill_chars``.

    Gap characters become part of the merged span. Applied left to right,
    so chains of small gaps collapse transitively. With ``fill_chars=0``
    this is the identity on any canonical SpanSet.
    """
    n = cfg.fill_chars
    if n == 0 or len(spans.ranges) < 2:
        return spans
    merged: list[list[int]] = [list(spans.ranges[0])]
    for start, end in spans.ranges[1:]:
        if start - merged[-1][1] <= n:
            merged[-1][1] = end
        else:
            merged.append([start, end])
    return SpanSet((s, e) for s, e in merged)


def overlap(a: SpanSet, b: SpanSet) -> int:
    """Number of character offsets covered by both span sets."""
    total = 0
    i = j = 0
    ar = a.ranges
    br = b.ranges
    na = len(ar)
    nb = len(br)
    while i < na and j < nb:
        s1, e1 = ar[i]
        s2, e2 = br[j]
        lo = s1 if s1 > s2 else s2
        hi = e1 if e1 < e2 else e2
        if hi > lo:
            total += hi - lo
        if e1 <= e2:
            i += 1
        else:
            j += 1
    return total
