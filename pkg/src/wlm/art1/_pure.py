"""numpy implementation of the ART1 search/update loops.

Used when the compiled ``_kernel`` extension is not available.  Scores are
summed with ``np.add.accumulate`` so the addition order is strictly
left-to-right, matching the compiled loop bit for bit.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _scores(p, w, n_committed, with_uncommitted, init_weight):
    pf = p.astype(np.float64)
    scores = np.empty(n_committed + (1 if with_uncommitted else 0))
    if n_committed:
        scores[:n_committed] = np.add.accumulate(w[:n_committed] * pf, axis=1)[:, -1]
    if with_uncommitted:
        scores[n_committed] = np.add.accumulate(init_weight * pf)[-1]
    return scores


def search(p, proto, w, n_committed, with_uncommitted, init_weight, rho, allow_forced):
    """Return (winner, ratio, forced, iterations); winner is -1 when nothing matches."""
    scores = _scores(p, w, n_committed, with_uncommitted, init_weight)
    norm = int(p.sum())
    overlaps = (proto[:n_committed] & p).sum(axis=1, dtype=np.int64)
    # failed nodes drop to -inf; argmax then returns the lowest index on ties
    remaining = len(scores)
    iters = 0
    ratio = 0.0
    while remaining:
        best = int(np.argmax(scores))
        iters += 1
        ratio = 1.0 if best == n_committed else int(overlaps[best]) / norm
        if ratio > rho:
            return best, ratio, False, iters
        if remaining == 1:
            if allow_forced:
                return best, ratio, True, iters
            return -1, ratio, False, iters
        scores[best] = -np.inf
        remaining -= 1
    return -1, ratio, False, iters


def _update(p, proto, w, j, fresh):
    if fresh:
        proto[j] = p
    else:
        proto[j] &= p
    w[j] = proto[j] / (0.5 + float(proto[j].sum(dtype=np.int64)))


def run_epoch(patterns, proto, w, n_committed, max_nodes, init_weight, rho,
              assign, ratios, forced, iterations, members):
    """Present every pattern once, in order, updating the model in place.

    Returns the new committed-node count.
    """
    for r in range(patterns.shape[0]):
        p = patterns[r]
        j, ratio, was_forced, it = search(
            p, proto, w, n_committed, n_committed < max_nodes, init_weight, rho, True)
        fresh = j == n_committed
        _update(p, proto, w, j, fresh)
        if fresh:
            n_committed += 1
        members[j] += 1
        assign[r] = j
        ratios[r] = ratio
        forced[r] = was_forced
        iterations[r] = it
    return n_committed
