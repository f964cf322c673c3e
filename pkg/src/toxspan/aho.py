"""Aho-Corasick automaton for multi-pattern substring search.

Finds every occurrence of every pattern in a text in a single left-to-right
pass, which keeps span prediction close to linear in text length even with
lexicons of tens of thousands of entries. Three build phases:

    1. Insert each pattern into a character trie.
    2. Compute failure links by BFS: on mismatch, fall back to the longest
       proper suffix of the current path that is also a trie path.
    3. Attach to each node the lengths of all patterns ending there,
       including those reachable through the failure chain.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Iterator


class AhoCorasick:
    """Automaton over the patterns added before the first search.

    Patterns are matched literally (no case folding here; fold the text
    and the patterns consistently before building). Adding a pattern after
    a search triggers a rebuild on the next search.
    """

    def __init__(self, patterns: Iterable[str] = ()):
        # Parallel arrays indexed by node: children dict, failure link,
        # and lengths of patterns ending at the node.
        self._children: list[dict[str, int]] = [{}]
        self._fail: list[int] = [0]
        self._lengths: list[tuple[int, ...]] = [()]
        self._built = False
        self._n_patterns = 0
        for pattern in patterns:
            self.add(pattern)

    def __len__(self) -> int:
        return self._n_patterns

    def add(self, pattern: str) -> None:
        if not pattern:
            raise ValueError("empty pattern would match everywhere")
        node = 0
        for ch in pattern:
            nxt = self._children[node].get(ch)
            if nxt is None:
                nxt = len(self._children)
                self._children[node][ch] = nxt
                self._children.append({})
                self._fail.append(0)
                self._lengths.append(())
            node = nxt
        if len(pattern) not in self._lengths[node]:
            self._lengths[node] = self._lengths[node] + (len(pattern),)
            self._n_patterns += 1
        self._built = False

    def _build(self) -> None:
        children = self._children
        fail = self._fail
        lengths = self._lengths
        queue: deque[int] = deque()
        for child in children[0].values():
            fail[child] = 0
            queue.append(child)
        while queue:
            node = queue.popleft()
            for ch, child in children[node].items():
                # Walk the failure chain of `node` looking for `ch`.
                f = fail[node]
                while f and ch not in children[f]:
                    f = fail[f]
                target = children[f].get(ch, 0)
                fail[child] = target if target != child else 0
                if lengths[fail[child]]:
                    lengths[child] = lengths[child] + tuple(
                        n for n in lengths[fail[child]] if n not in lengths[child]
                    )
                queue.append(child)
        self._built = True

    def find(self, text: str) -> Iterator[tuple[int, int]]:
        """Yield the half-open range of every pattern occurrence in text.

        Occurrences are emitted in order of their end position; a position
        can yield several ranges when patterns are suffixes of each other.
        """
        if not self._built:
            self._build()
        children = self._children
        fail = self._fail
        lengths = self._lengths
        node = 0
        for i, ch in enumerate(text):
            while node and ch not in children[node]:
                node = fail[node]
            node = children[node].get(ch, 0)
            if lengths[node]:
                end = i + 1
                for n in lengths[node]:
                    yield end - n, end
