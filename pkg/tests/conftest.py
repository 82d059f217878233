"""Shared fixtures and independent reference implementations.

The reference implementations here are deliberately naive (pure-Python
quadratic loops) so they stay independent of the vectorized code paths they
check.
"""

import math
from collections import deque

import numpy as np
import pytest

from graphann.index import IndexParams, construct


def naive_top_k(points, query, k, metric="l2"):
    """Quadratic-loop exact k-NN; ties break toward the smaller id.

    `points` is a list of (external_id, vector). Independent of the
    package's oracle: scalar loops, explicit sort on (distance, id) pairs.
    """
    scored = []
    for ext, vec in points:
        if metric == "angular":
            qn = math.sqrt(sum(float(x) * float(x) for x in query))
            vn = math.sqrt(sum(float(x) * float(x) for x in vec))
            acc = 0.0
            for a, b in zip(vec, query):
                d = float(a) / vn - float(b) / qn
                acc += d * d
        else:
            acc = 0.0
            for a, b in zip(vec, query):
                d = float(np.float32(a)) - float(np.float32(b))
                acc += d * d
        scored.append((acc, int(ext)))
    scored.sort()
    return [ext for _, ext in scored[:k]]


def naive_recall(result_ids, true_ids):
    """Direct re-statement of the 1-Recall@k indicator sum."""
    hits = 0
    for ids, g in zip(result_ids, true_ids):
        if g in list(ids):
            hits += 1
    return hits / len(true_ids)


def bfs_reachable(index, level=0):
    """Count of nodes reachable from the entry point within one level."""
    if index.entry_slot < 0:
        return 0
    adj, deg = index.adj[level], index.deg[level]
    seen = {int(index.entry_slot)}
    queue = deque(seen)
    while queue:
        slot = queue.popleft()
        for nb in adj[slot, : deg[slot]]:
            nb = int(nb)
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return len(seen)


def random_records(n, d, seed, low=0.0, high=1.0):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(low, high, (n, d)).astype(np.float32)
    return [(i + 1, pts[i]) for i in range(n)], pts


@pytest.fixture(scope="session")
def uniform_index_500():
    """500 uniform points, d=8, plus their raw matrix (shared, read-only)."""
    records, pts = random_records(500, 8, seed=9)
    index = construct(records, IndexParams(dimension=8, m=16, ef_construction=100, seed=5))
    return index, records, pts
