"""Dynamic ART1 network: lazily committed F2 nodes, vigilance-driven search."""

from __future__ import annotations

import logging
import math
import sys
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..patterns import PatternVector
from . import backend as _backend_mod

log = logging.getLogger(__name__)

UNCLUSTERED = -1


@dataclass(frozen=True)
class Art1Config:
    vigilance: float = 0.4
    max_clusters: int | None = None  # None: unbounded
    max_epochs: int = 10

    def __post_init__(self):
        if not 0.0 <= self.vigilance < 1.0:
            raise ValueError(f"vigilance must lie in [0, 1), got {self.vigilance}")
        if self.max_clusters is not None and self.max_clusters < 1:
            raise ValueError("max_clusters must be >= 1 or None")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")


@dataclass
class ClusterNode:
    bottom_up: np.ndarray
    prototype: np.ndarray
    committed: bool
    member_count: int = 0


@dataclass(frozen=True)
class Presentation:
    cluster: int
    ratio: float
    forced: bool
    iterations: int


@dataclass
class Assignment:
    """Final mapping of host keys to clusters, with the similarity each was accepted at."""

    clusters: dict[str, int] = field(default_factory=dict)
    ratios: dict[str, float] = field(default_factory=dict)
    forced: dict[str, bool] = field(default_factory=dict)

    @property
    def forced_count(self) -> int:
        return sum(self.forced.values())


@dataclass
class TrainResult:
    assignment: Assignment
    epochs_used: int
    converged: bool
    iterations: np.ndarray  # reset-loop length of each presentation, last epoch


def _as_bits(p, n: int) -> np.ndarray:
    if isinstance(p, PatternVector):
        p = p.bits
    arr = np.ascontiguousarray(p, dtype=np.uint8)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise ValueError(f"pattern has shape {arr.shape}, expected ({n},)")
    if arr.max(initial=0) > 1:
        raise ValueError("pattern must be binary")
    if not arr.any():
        raise ValueError("pattern has no set bit")
    return arr


class Art1Model:
    """ART1 network over ``n``-bit inputs.

    Committed nodes occupy rows ``[0, n_committed)`` of ``prototypes`` (top-down
    weights, 0/1) and ``bottom_up``.  The uncommitted candidate always has
    bottom-up weights ``2/(1+n)`` and an all-ones prototype; it is materialized
    only when it wins, as long as ``max_clusters`` allows.
    """

    def __init__(self, n: int, config: Art1Config | None = None, backend=None):
        if n < 1:
            raise ValueError("input dimension must be >= 1")
        self.n = n
        self.config = config or Art1Config()
        self.kernel = backend or _backend_mod.kernel
        self.init_weight = 2.0 / (1.0 + n)
        self.n_committed = 0
        self.prototypes = np.zeros((0, n), dtype=np.uint8)
        self.bottom_up = np.zeros((0, n), dtype=np.float64)
        self.member_counts = np.zeros(0, dtype=np.int64)

    # -- capacity -----------------------------------------------------------

    @property
    def max_nodes(self) -> int:
        mc = self.config.max_clusters
        return sys.maxsize if mc is None else mc

    @property
    def has_uncommitted(self) -> bool:
        return self.n_committed < self.max_nodes

    def _reserve(self, extra: int) -> None:
        need = min(self.n_committed + extra, self.max_nodes)
        cap = self.prototypes.shape[0]
        if need <= cap:
            return
        new_cap = min(max(need, 2 * cap, 8), self.max_nodes)
        proto = np.zeros((new_cap, self.n), dtype=np.uint8)
        w = np.zeros((new_cap, self.n), dtype=np.float64)
        counts = np.zeros(new_cap, dtype=np.int64)
        proto[:cap] = self.prototypes
        w[:cap] = self.bottom_up
        counts[:cap] = self.member_counts
        self.prototypes, self.bottom_up, self.member_counts = proto, w, counts

    # -- inspection ---------------------------------------------------------

    @property
    def nodes(self) -> list[ClusterNode]:
        return [
            ClusterNode(self.bottom_up[k].copy(), self.prototypes[k].copy(), True,
                        int(self.member_counts[k]))
            for k in range(self.n_committed)
        ]

    def uncommitted_node(self) -> ClusterNode:
        return ClusterNode(np.full(self.n, self.init_weight), np.ones(self.n, dtype=np.uint8), False)

    def committed_prototypes(self) -> np.ndarray:
        return self.prototypes[: self.n_committed].copy()

    # -- single steps -------------------------------------------------------

    def match_scores(self, p) -> tuple[np.ndarray, int]:
        """Bottom-up scores of the committed nodes plus the uncommitted candidate.

        Returns ``(scores, winner)``; the candidate, when present, is the last
        entry.  Ties go to the lowest index.
        """
        p = _as_bits(p, self.n)
        scores = []
        for k in range(self.n_committed):
            s = 0.0
            for i in range(self.n):
                s += float(self.bottom_up[k, i]) * int(p[i])
            scores.append(s)
        if self.has_uncommitted:
            s = 0.0
            for i in range(self.n):
                s += self.init_weight * int(p[i])
            scores.append(s)
        arr = np.array(scores)
        return arr, int(np.argmax(arr))

    @staticmethod
    def vigilance_test(node: ClusterNode, p, rho: float) -> tuple[bool, float]:
        p = np.asarray(p.bits if isinstance(p, PatternVector) else p, dtype=np.int64)
        norm = int(p.sum())
        if norm < 1:
            raise ValueError("pattern has no set bit")
        ratio = int((node.prototype.astype(np.int64) * p).sum()) / norm
        return ratio > rho, ratio

    def commit_update(self, j: int, p) -> None:
        """Learn ``p`` into node ``j`` (``j == n_committed`` commits a fresh node)."""
        p = _as_bits(p, self.n)
        if not 0 <= j <= self.n_committed or (j == self.n_committed and not self.has_uncommitted):
            raise IndexError(f"no node {j} to update")
        fresh = j == self.n_committed
        self._reserve(1)
        proto = self.prototypes[j]
        if fresh:
            proto[:] = p
            self.n_committed += 1
        else:
            proto &= p
        self.bottom_up[j] = proto / (0.5 + float(proto.sum(dtype=np.int64)))
        self.member_counts[j] += 1

    # -- search -------------------------------------------------------------

    def present(self, p) -> Presentation:
        """Run the reset search for ``p`` and learn it into the winning node."""
        p = _as_bits(p, self.n)
        result = self._run(p[None, :])
        return result[0]

    def assign_only(self, p) -> int:
        """Cluster ``p`` would join, without learning; ``UNCLUSTERED`` if none.

        Runs the same search as ``present``, uncommitted candidate included, so
        the answer is UNCLUSTERED exactly when ``present`` would commit a new
        node or force an assignment.
        """
        p = _as_bits(p, self.n)
        if self.n_committed == 0:
            return UNCLUSTERED
        winner, _, _, _ = self.kernel.search(
            p, self.prototypes, self.bottom_up, self.n_committed, self.has_uncommitted,
            self.init_weight, self.config.vigilance, False)
        return UNCLUSTERED if winner == self.n_committed else int(winner)

    def _run(self, patterns: np.ndarray) -> list[Presentation]:
        assign, ratios, forced, iters = self._epoch(patterns)
        return [Presentation(int(a), float(r), bool(f), int(i))
                for a, r, f, i in zip(assign, ratios, forced, iters)]

    def _epoch(self, patterns: np.ndarray):
        """One pass over ``patterns``; returns per-pattern (cluster, ratio, forced, iterations) arrays."""
        m = patterns.shape[0]
        self._reserve(m)
        assign = np.empty(m, dtype=np.int64)
        ratios = np.empty(m, dtype=np.float64)
        forced = np.zeros(m, dtype=np.uint8)
        iters = np.empty(m, dtype=np.int64)
        self.n_committed = int(self.kernel.run_epoch(
            patterns, self.prototypes, self.bottom_up, self.n_committed,
            min(self.max_nodes, self.prototypes.shape[0]), self.init_weight,
            self.config.vigilance, assign, ratios, forced, iters, self.member_counts))
        if forced.any():
            for k in np.unique(assign[forced.astype(bool)]):
                if not self.prototypes[k].any():
                    log.warning("forced assignment emptied the prototype of cluster %d", k)
        return assign, ratios, forced.astype(bool), iters

    # -- training -----------------------------------------------------------

    def train(self, patterns, hosts: Sequence[str] | None = None) -> TrainResult:
        """Present ``patterns`` in order, epoch after epoch, until nothing changes.

        An epoch counts as stable when no prototype changed and every pattern
        landed in the same cluster as in the previous epoch.
        """
        if isinstance(patterns, np.ndarray):
            mat = np.ascontiguousarray(patterns, dtype=np.uint8)
            if hosts is None:
                hosts = [str(i) for i in range(mat.shape[0])]
        else:
            patterns = list(patterns)
            if hosts is None:
                hosts = [p.host if isinstance(p, PatternVector) else str(i)
                         for i, p in enumerate(patterns)]
            mat = np.array([p.bits if isinstance(p, PatternVector) else p for p in patterns],
                           dtype=np.uint8).reshape(len(patterns), -1)
            if not patterns:
                mat = np.zeros((0, self.n), dtype=np.uint8)
        if mat.ndim != 2 or mat.shape[1] != self.n:
            raise ValueError(f"patterns have dimension {mat.shape[1:]}, model expects {self.n}")
        if len(hosts) != mat.shape[0]:
            raise ValueError("hosts and patterns differ in length")
        if mat.shape[0] and (mat.max() > 1 or not mat.any(axis=1).all()):
            raise ValueError("patterns must be binary with at least one set bit")

        prev_assign = None
        converged = False
        for epochs in range(1, self.config.max_epochs + 1):
            before = self.prototypes[: self.n_committed].copy()
            self.member_counts[:] = 0
            assign, ratios, forced, iters = self._epoch(mat)
            stable = (
                prev_assign is not None
                and np.array_equal(prev_assign, assign)
                and before.shape[0] == self.n_committed
                and np.array_equal(before, self.prototypes[: self.n_committed])
            )
            prev_assign = assign
            if stable:
                converged = True
                break
        assignment = Assignment(
            clusters=dict(zip(hosts, assign.tolist())),
            ratios=dict(zip(hosts, ratios.tolist())),
            forced=dict(zip(hosts, forced.tolist())),
        )
        return TrainResult(assignment, epochs, converged, iters)

    # -- reporting ----------------------------------------------------------

    def zero_prototype_count(self) -> int:
        return int((~self.prototypes[: self.n_committed].any(axis=1)).sum())

    def check_coupling(self, atol: float = 1e-12) -> float:
        """Largest deviation of bottom-up weights from prototype / (0.5 + |prototype|)."""
        if self.n_committed == 0:
            return 0.0
        v = self.prototypes[: self.n_committed].astype(np.float64)
        expected = v / (0.5 + v.sum(axis=1, keepdims=True))
        dev = float(np.abs(expected - self.bottom_up[: self.n_committed]).max())
        return dev if math.isfinite(dev) else math.inf
