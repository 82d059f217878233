"""HNSW-style proximity graph index: construct, search, add.

The graph is stored slot-addressed: a float32 vector matrix plus an int32
adjacency cube (level x slot x neighbor) with per-level degree counts.
External ids are decoupled from slots through a bidirectional map so that
physical deletion can recycle storage while external ids stay unique
forever.

Determinism contract: level draws come from a PCG64 generator seeded by the
index parameters, inserts are processed in list order, and equal distances
are broken by smaller external id, so two construct() calls over the same
records produce bit-identical adjacency.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    DimensionMismatchError,
    DuplicateIdError,
    EmptyIndexError,
    SearchParameterError,
    UnknownIdError,
)

METRICS = ("l2", "angular")


@dataclass(frozen=True)
class VectorRecord:
    """One indexable point: a stable positive external id plus its vector."""

    external_id: int
    vector: np.ndarray

    def __post_init__(self):
        if int(self.external_id) < 1:
            raise ValueError(f"external_id must be a positive integer, got {self.external_id}")


@dataclass(frozen=True)
class IndexParams:
    """Construction parameters; `seed` drives all level assignment."""

    dimension: int
    metric: str = "l2"
    m: int = 16
    ef_construction: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.m < 2:
            raise ValueError("m must be >= 2")
        if self.ef_construction < 1:
            raise ValueError("ef_construction must be >= 1")

    @property
    def m0(self) -> int:
        # standard HNSW convention: double degree budget at the base layer
        return 2 * self.m


@dataclass(frozen=True)
class SearchResult:
    """Nearest-first ids with matching distances."""

    ids: tuple[int, ...]
    distances: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.ids)


def distance(a, b, metric: str = "l2") -> float:
    """Distance between two vectors: Euclidean, or angular via normalized L2.

    The angular form is monotone in (1 - cosine similarity), symmetric and
    scale invariant. Raises DimensionMismatchError on unequal lengths.
    """
    av = np.asarray(a, dtype=np.float32)
    bv = np.asarray(b, dtype=np.float32)
    if av.ndim != 1 or bv.ndim != 1 or av.shape[0] != bv.shape[0]:
        raise DimensionMismatchError(
            f"vectors must be 1-d of equal length, got shapes {av.shape} and {bv.shape}"
        )
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    if metric == "angular":
        av = _normalize(av)
        bv = _normalize(bv)
    return math.sqrt(kernels.squared_distance_pair(av, bv))


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec.astype(np.float64)))
    if norm == 0.0:
        raise ValueError("zero vector is not representable under the angular metric")
    return (vec.astype(np.float64) / norm).astype(np.float32)


class GraphIndex:
    """Layered proximity graph over slot-addressed vector storage.

    Use the module-level construct()/add()/search() functions rather than
    touching the arrays directly; the deletion strategies live in
    graphann.deletion.
    """

    def __init__(self, params: IndexParams, capacity: int = 64):
        capacity = max(capacity, 8)
        self.params = params
        self.rng = np.random.default_rng(params.seed)
        self.vectors = np.zeros((capacity, params.dimension), dtype=np.float32)
        self.node_level = np.full(capacity, -1, dtype=np.int32)  # -1 = free slot
        self.slot_external = np.zeros(capacity, dtype=np.int64)
        self.adj = np.zeros((0, capacity, params.m0), dtype=np.int32)
        self.deg = np.zeros((0, capacity), dtype=np.int32)
        self.external_slot: dict[int, int] = {}
        self.used_ids: set[int] = set()
        self.free_slots: list[int] = []  # heap, smallest slot reused first
        self.next_slot = 0
        self.entry_slot = -1
        self._level_mult = 1.0 / math.log(params.m)
        self._alloc_scratch(capacity)

    def _alloc_scratch(self, capacity: int) -> None:
        self._visited = np.zeros(capacity, dtype=np.int64)
        self._stamp = 0
        self._heap_d = np.empty(capacity + 1, dtype=np.float64)
        self._heap_s = np.empty(capacity + 1, dtype=np.int32)

    # -- bookkeeping ------------------------------------------------------

    @property
    def dimension(self) -> int:
        return self.params.dimension

    @property
    def metric(self) -> str:
        return self.params.metric

    @property
    def live_count(self) -> int:
        return len(self.external_slot)

    @property
    def level_count(self) -> int:
        return self.adj.shape[0]

    @property
    def max_level(self) -> int:
        return self.adj.shape[0] - 1

    @property
    def entry_point(self) -> tuple[int, int] | None:
        """(external_id, level) of the entry node, or None when empty."""
        if self.entry_slot < 0:
            return None
        return int(self.slot_external[self.entry_slot]), int(self.node_level[self.entry_slot])

    def live_ids(self) -> list[int]:
        return sorted(self.external_slot)

    def is_live(self, external_id: int) -> bool:
        return int(external_id) in self.external_slot

    def vector_of(self, external_id: int) -> np.ndarray:
        return self.vectors[self.slot_of(external_id)].copy()

    def slot_of(self, external_id: int) -> int:
        try:
            return self.external_slot[int(external_id)]
        except KeyError:
            raise UnknownIdError(f"id {external_id} is not live in the index") from None

    def neighbors_of(self, external_id: int, level: int = 0) -> tuple[int, ...]:
        slot = self.slot_of(external_id)
        if level >= self.level_count or self.node_level[slot] < level:
            return ()
        row = self.adj[level, slot, : self.deg[level, slot]]
        return tuple(int(self.slot_external[s]) for s in row)

    def copy(self) -> "GraphIndex":
        """Deep copy; much cheaper than reconstructing for paired runs."""
        clone = GraphIndex.__new__(GraphIndex)
        clone.params = self.params
        clone.rng = np.random.default_rng()
        clone.rng.bit_generator.state = self.rng.bit_generator.state
        clone.vectors = self.vectors.copy()
        clone.node_level = self.node_level.copy()
        clone.slot_external = self.slot_external.copy()
        clone.adj = self.adj.copy()
        clone.deg = self.deg.copy()
        clone.external_slot = dict(self.external_slot)
        clone.used_ids = set(self.used_ids)
        clone.free_slots = list(self.free_slots)
        clone.next_slot = self.next_slot
        clone.entry_slot = self.entry_slot
        clone._level_mult = self._level_mult
        clone._alloc_scratch(self.vectors.shape[0])
        return clone

    def adjacency_snapshot(self) -> dict[int, dict[int, tuple[int, ...]]]:
        """{level: {external_id: neighbor external ids in storage order}}."""
        snap: dict[int, dict[int, tuple[int, ...]]] = {}
        for level in range(self.level_count):
            rows = {}
            for ext, slot in self.external_slot.items():
                if self.node_level[slot] >= level:
                    row = self.adj[level, slot, : self.deg[level, slot]]
                    rows[ext] = tuple(int(self.slot_external[s]) for s in row)
            snap[level] = rows
        return snap

    def check_invariants(self) -> None:
        """Raise AssertionError if any structural invariant is violated."""
        live_slots = set(self.external_slot.values())
        top = -1
        for level in range(self.level_count):
            cap = self.params.m0 if level == 0 else self.params.m
            for ext, slot in self.external_slot.items():
                if self.node_level[slot] < level:
                    assert self.deg[level, slot] == 0, f"node {ext} has edges above its level"
                    continue
                top = max(top, level)
                row = self.adj[level, slot, : self.deg[level, slot]]
                assert len(row) <= cap, f"node {ext} exceeds the degree cap at level {level}"
                assert len(set(int(s) for s in row)) == len(row), f"node {ext} has duplicate edges"
                for nb in row:
                    assert int(nb) in live_slots, f"node {ext} points at a dead slot"
                    assert int(nb) != slot, f"node {ext} lists itself as a neighbor"
                    assert self.node_level[nb] >= level, (
                        f"node {ext} points at a node absent from level {level}"
                    )
        if self.entry_slot >= 0:
            assert self.entry_slot in live_slots, "entry point is not live"
            assert int(self.node_level[self.entry_slot]) == self.max_level == top, (
                "entry point is not at the top level"
            )
        else:
            assert not self.external_slot, "non-empty index without an entry point"

    # -- storage ----------------------------------------------------------

    def _ensure_capacity(self, needed: int) -> None:
        cap = self.vectors.shape[0]
        if needed <= cap:
            return
        new_cap = max(needed, int(cap * 1.5) + 1)
        self.vectors = _grown(self.vectors, (new_cap, self.dimension), 0.0)
        self.node_level = _grown(self.node_level, (new_cap,), -1)
        self.slot_external = _grown(self.slot_external, (new_cap,), 0)
        levels = self.adj.shape[0]
        self.adj = _grown(self.adj, (levels, new_cap, self.params.m0), 0, axis=1)
        self.deg = _grown(self.deg, (levels, new_cap), 0, axis=1)
        self._alloc_scratch(new_cap)

    def _ensure_levels(self, level: int) -> None:
        have = self.adj.shape[0]
        if level < have:
            return
        cap = self.vectors.shape[0]
        extra = level + 1 - have
        self.adj = np.concatenate(
            [self.adj, np.zeros((extra, cap, self.params.m0), dtype=np.int32)], axis=0
        )
        self.deg = np.concatenate([self.deg, np.zeros((extra, cap), dtype=np.int32)], axis=0)

    def _take_slot(self) -> int:
        if self.free_slots:
            return heapq.heappop(self.free_slots)
        self._ensure_capacity(self.next_slot + 1)
        slot = self.next_slot
        self.next_slot += 1
        return slot

    def _release_slot(self, slot: int) -> None:
        self.node_level[slot] = -1
        self.slot_external[slot] = 0
        self.vectors[slot] = 0.0
        self.deg[:, slot] = 0
        heapq.heappush(self.free_slots, slot)

    # -- insertion --------------------------------------------------------

    def _draw_level(self) -> int:
        u = self.rng.random()
        return int(-math.log(1.0 - u) * self._level_mult)

    def _prepare_vector(self, vector) -> np.ndarray:
        vec = np.asarray(vector, dtype=np.float32)
        if vec.ndim != 1 or vec.shape[0] != self.dimension:
            raise DimensionMismatchError(
                f"expected a vector of dimension {self.dimension}, got shape {vec.shape}"
            )
        if self.metric == "angular":
            vec = _normalize(vec)
        return vec

    def _insert(self, external_id: int, vector) -> None:
        external_id = int(external_id)
        if external_id in self.used_ids:
            raise DuplicateIdError(
                f"id {external_id} was already used; external ids are never reused"
            )
        vec = self._prepare_vector(vector)
        level = self._draw_level()
        old_entry = self.entry_slot
        entry_level = int(self.node_level[old_entry]) if old_entry >= 0 else -1

        slot = self._take_slot()
        self._ensure_levels(level)
        self.vectors[slot] = vec
        self.node_level[slot] = level
        self.slot_external[slot] = external_id
        self.external_slot[external_id] = slot
        self.used_ids.add(external_id)

        if old_entry < 0:
            self.entry_slot = slot
            return
        self._stamp = kernels.insert_node(
            self.vectors, self.adj, self.deg, self.slot_external,
            slot, level, old_entry, entry_level,
            self.params.m, self.params.m0, self.params.ef_construction,
            self._visited, self._stamp, self._heap_d, self._heap_s,
        )
        if level > entry_level:
            self.entry_slot = slot

    # -- search -----------------------------------------------------------

    def _search_slots(self, query, n_results: int, ef: int) -> tuple[np.ndarray, np.ndarray]:
        """Core traversal; returns (sq distances, slots) tie-sorted, truncated."""
        q = self._prepare_vector(query)
        cur = self.entry_slot
        cur_dist = kernels.squared_distance(self.vectors, cur, q)
        for lvl in range(int(self.node_level[cur]), 0, -1):
            cur, cur_dist = kernels.greedy_descend(
                self.vectors, self.adj[lvl], self.deg[lvl], q, cur, cur_dist
            )
        self._stamp += 1
        res_d, res_s = kernels.search_layer(
            self.vectors, self.adj[0], self.deg[0], q,
            np.array([cur], dtype=np.int32), np.array([cur_dist], dtype=np.float64),
            ef, self._visited, self._stamp, self._heap_d, self._heap_s,
        )
        order = np.lexsort((self.slot_external[res_s], res_d))[:n_results]
        return res_d[order], res_s[order]


def _grown(arr: np.ndarray, shape: tuple, fill, axis: int = 0) -> np.ndarray:
    out = np.full(shape, fill, dtype=arr.dtype)
    sel = tuple(slice(0, s) for s in arr.shape)
    out[sel] = arr
    return out


def construct(records, params: IndexParams) -> GraphIndex:
    """Build a fresh index by inserting records in list order.

    Empty input yields a valid empty index. Raises on duplicate external ids
    or dimension mismatches.
    """
    index = GraphIndex(params, capacity=max(len(records), 8))
    for rec in records:
        ext, vec = _unpack(rec)
        index._insert(ext, vec)
    return index


def add(index: GraphIndex, batch) -> GraphIndex:
    """Insert a batch of never-before-seen records; returns the same index."""
    for rec in batch:
        ext, vec = _unpack(rec)
        index._insert(ext, vec)
    return index


def _unpack(rec) -> tuple[int, np.ndarray]:
    if isinstance(rec, VectorRecord):
        return int(rec.external_id), rec.vector
    ext, vec = rec
    if int(ext) < 1:
        raise ValueError(f"external_id must be a positive integer, got {ext}")
    return int(ext), vec


def search(index: GraphIndex, query, k: int, ef: int) -> SearchResult:
    """Approximate k nearest neighbors, nearest first.

    Returns min(k, live count) ids; equal distances break toward the smaller
    external id. Raises EmptyIndexError on an empty index and
    SearchParameterError when ef < k.
    """
    if index.live_count == 0:
        raise EmptyIndexError("cannot search an empty index")
    if k < 1:
        raise SearchParameterError(f"k must be >= 1, got {k}")
    if ef < k:
        raise SearchParameterError(f"ef ({ef}) must be at least k ({k})")
    dist2, slots = index._search_slots(query, k, ef)
    ids = tuple(int(index.slot_external[s]) for s in slots)
    return SearchResult(ids=ids, distances=tuple(math.sqrt(d) for d in dist2))
