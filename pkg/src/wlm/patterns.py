"""Base URL vector and per-host binary access patterns."""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PatternSet",
    "PatternVector",
    "UrlIndex",
    "build_url_index",
    "count_requests",
    "gen_pattern",
]

DEFAULT_TOP_N = 64
DEFAULT_THRESHOLD = 2


@dataclass(frozen=True)
class UrlIndex:
    urls: tuple[str, ...]

    def __post_init__(self):
        if not self.urls:
            raise ValueError("URL index must hold at least one URL")
        if len(set(self.urls)) != len(self.urls):
            raise ValueError("URL index entries must be distinct")
        object.__setattr__(self, "position", {u: i for i, u in enumerate(self.urls)})

    @property
    def n(self) -> int:
        return len(self.urls)

    def __len__(self) -> int:
        return len(self.urls)


@dataclass(frozen=True)
class PatternVector:
    host: str
    bits: tuple[int, ...]

    def bitstring(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    @classmethod
    def from_bitstring(cls, host: str, text: str) -> "PatternVector":
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        return cls(host, tuple(int(c) for c in text))


@dataclass
class PatternSet:
    vectors: list[PatternVector]
    omitted: list[str]

    def matrix(self) -> np.ndarray:
        if not self.vectors:
            return np.zeros((0, 0), dtype=np.uint8)
        return np.array([v.bits for v in self.vectors], dtype=np.uint8)

    @property
    def hosts(self) -> list[str]:
        return [v.host for v in self.vectors]


def build_url_index(urls: Iterable[str], top_n: int = DEFAULT_TOP_N) -> UrlIndex:
    """Keep the ``top_n`` most requested URLs, by descending count then name."""
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    counts = Counter(urls)
    if not counts:
        raise ValueError("cannot build a URL index from zero requests")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return UrlIndex(tuple(u for u, _ in ranked[:top_n]))


def count_requests(pairs: Iterable[tuple[str, str]]) -> dict[str, Counter]:
    """Tally (host, url) pairs into per-host URL counts.

    Hosts keep the order in which they first appear.
    """
    per_host: dict[str, Counter] = {}
    for host, url in pairs:
        c = per_host.get(host)
        if c is None:
            c = per_host[host] = Counter()
        c[url] += 1
    return per_host


def gen_pattern(
    per_host: Mapping[str, Mapping[str, int]],
    index: UrlIndex,
    threshold: int = DEFAULT_THRESHOLD,
) -> PatternSet:
    """Set bit i for a host iff it requested URL i more than ``threshold`` times.

    Hosts whose vector comes out all zero are left out and listed in
    ``PatternSet.omitted``.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    vectors, omitted = [], []
    for host, counts in per_host.items():
        bits = tuple(1 if counts.get(url, 0) > threshold else 0 for url in index.urls)
        if any(bits):
            vectors.append(PatternVector(host, bits))
        else:
            omitted.append(host)
    return PatternSet(vectors, omitted)


def count_matrix(per_host: Mapping[str, Mapping[str, int]], index: UrlIndex) -> np.ndarray:
    """Dense hosts x URLs count matrix, rows in ``per_host`` order."""
    out = np.zeros((len(per_host), index.n), dtype=np.int64)
    pos = index.position
    for r, counts in enumerate(per_host.values()):
        for url, c in counts.items():
            i = pos.get(url)
            if i is not None:
                out[r, i] = c
    return out

