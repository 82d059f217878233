"""Evaluation metrics: 1-Recall@k, QPS, byte-level memory accounting, and
QPS-Recall curves.

Memory is measured by deterministic byte accounting over live index content
(float32 vectors, int32 adjacency entries, int64 flag ids), never by OS
resident set, so the numbers are exact and platform independent.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .deletion import search_filtered
from .index import GraphIndex, SearchResult, search

BYTES_PER_SCALAR = 4  # float32 vector components
BYTES_PER_EDGE = 4  # int32 adjacency entries
BYTES_PER_FLAG = 8  # int64 external ids in the flag set


@dataclass(frozen=True)
class RecallReport:
    """1-Recall@k over a query batch: the fraction of queries whose true
    nearest neighbor appears among the k returned candidates."""

    k: int
    hits: int
    n_q: int
    recall: float


@dataclass(frozen=True)
class ThroughputReport:
    """Operations per second for one timed batch."""

    operation: str  # search | add | delete
    n_ops: int
    elapsed_s: float
    qps: float


@dataclass(frozen=True)
class MemoryReport:
    vector_bytes: int
    adjacency_bytes: int
    flag_bytes: int
    total_bytes: int


@dataclass(frozen=True)
class CurvePoint:
    ef: int
    recall: float
    qps: float


def qps(n_ops: int, elapsed_s: float) -> float:
    """Queries (operations) per second for a batch timed as one interval."""
    if elapsed_s <= 0:
        raise ValueError(f"elapsed time must be positive, got {elapsed_s}")
    return n_ops / elapsed_s


def throughput(operation: str, n_ops: int, elapsed_s: float) -> ThroughputReport:
    return ThroughputReport(operation, n_ops, elapsed_s, qps(n_ops, elapsed_s))


def recall_at_k(results, ground_truth, k: int) -> RecallReport:
    """Score each query 1 if its true nearest id is among the returned ids.

    `results` holds one SearchResult (or id sequence) per query and
    `ground_truth` the matching true nearest ids. An empty result counts as
    a miss. Raises on a length mismatch or an empty query set.
    """
    if len(results) != len(ground_truth):
        raise ValueError(
            f"got {len(results)} results for {len(ground_truth)} ground-truth entries"
        )
    n_q = len(results)
    if n_q == 0:
        raise ValueError("cannot compute recall over zero queries")
    hits = 0
    for res, true_id in zip(results, ground_truth):
        ids = res.ids if isinstance(res, SearchResult) else tuple(res)
        if len(ids) > k:
            raise ValueError(f"a result holds {len(ids)} ids, more than k={k}")
        if int(true_id) in ids:
            hits += 1
    return RecallReport(k=k, hits=hits, n_q=n_q, recall=hits / n_q)


def memory_usage(index: GraphIndex, flags: set[int] | None = None) -> MemoryReport:
    """Deterministic byte accounting of live vectors, edges, and flags."""
    flags = flags or set()
    live = index.live_count
    vector_bytes = live * index.dimension * BYTES_PER_SCALAR
    if live:
        slots = np.fromiter(index.external_slot.values(), dtype=np.int64, count=live)
        adjacency_bytes = int(index.deg[:, slots].sum()) * BYTES_PER_EDGE
    else:
        adjacency_bytes = 0
    flag_bytes = len(flags) * BYTES_PER_FLAG
    return MemoryReport(
        vector_bytes=vector_bytes,
        adjacency_bytes=adjacency_bytes,
        flag_bytes=flag_bytes,
        total_bytes=vector_bytes + adjacency_bytes + flag_bytes,
    )


def timed_search_batch(
    index: GraphIndex,
    flags: set[int],
    queries: np.ndarray,
    k: int,
    ef: int,
) -> tuple[list[SearchResult], ThroughputReport]:
    """Run one query batch under a single monotonic timer.

    Uses flag-filtered search whenever flags are present, plain search
    otherwise, matching how each deletion method answers queries.
    """
    results: list[SearchResult] = []
    if flags:
        t0 = time.perf_counter()
        for q in queries:
            results.append(search_filtered(index, flags, q, k, ef))
        elapsed = time.perf_counter() - t0
    else:
        t0 = time.perf_counter()
        for q in queries:
            results.append(search(index, q, k, ef))
        elapsed = time.perf_counter() - t0
    return results, throughput("search", len(results), elapsed)


def qps_recall_curve(
    index: GraphIndex,
    flags: set[int],
    queries: np.ndarray,
    ground_truth,
    k: int,
    ef_ladder,
) -> list[CurvePoint]:
    """One (recall, qps) point per ef in a strictly increasing ladder."""
    ladder = [int(e) for e in ef_ladder]
    if not ladder:
        raise ValueError("ef ladder must not be empty")
    if any(e < k for e in ladder):
        raise ValueError(f"every ef in the ladder must be >= k ({k})")
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ef ladder must be strictly increasing")
    points = []
    for ef in ladder:
        results, tput = timed_search_batch(index, flags, queries, k, ef)
        report = recall_at_k(results, ground_truth, k)
        points.append(CurvePoint(ef=ef, recall=report.recall, qps=tput.qps))
    return points
