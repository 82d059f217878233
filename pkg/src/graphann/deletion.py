"""The three deletion strategies behind one DELETE contract.

Logical deletion flags ids and post-filters search results; the graph and
its storage are untouched. Physical deletion removes nodes and every edge
referencing them, with no reconnection. Rebuilding reconstructs the whole
graph from the survivors.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import AlreadyFlaggedError, SearchParameterError, UnknownIdError
from .index import GraphIndex, SearchResult, construct, search


class DeletionMethod(enum.Enum):
    LOGICAL = "logical"
    PHYSICAL = "physical"
    REBUILD = "rebuild"

    @classmethod
    def from_string(cls, name: str) -> "DeletionMethod":
        try:
            return cls(name.strip().lower())
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown deletion method {name!r} (choose from {choices})") from None


def _checked_batch(index: GraphIndex, batch) -> set[int]:
    if isinstance(batch, (set, frozenset)):
        ids = set(batch)
    else:
        listed = list(batch)
        ids = set(listed)
        if len(ids) != len(listed):
            raise ValueError("delete batch contains duplicate ids")
    if not ids:
        raise ValueError("delete batch must be non-empty")
    if not ids <= index.external_slot.keys():
        missing = min(ids - index.external_slot.keys())
        raise UnknownIdError(f"id {missing} is not live in the index")
    return ids


def delete_logical(index: GraphIndex, flags: set[int], batch) -> set[int]:
    """Flag a batch of live, unflagged ids; returns the updated flag set.

    This is a set union into `flags` (validated first, then applied in
    place). Graph topology and node storage are untouched; flagged vectors
    stay in memory until a physical delete or rebuild reclaims them.
    """
    ids = _checked_batch(index, batch)
    if not ids.isdisjoint(flags):
        raise AlreadyFlaggedError(
            f"id {min(ids & flags)} is already flagged as deleted"
        )
    flags |= ids
    return flags


def search_filtered(index: GraphIndex, flags: set[int], query, k: int, ef: int) -> SearchResult:
    """Search, then drop flagged ids from the result (logical deletion).

    Over-fetches min(k + |flags|, ef) candidates before filtering so the
    filter rarely empties the result, then truncates back to k. May still
    return fewer than k ids, possibly none, when flags dominate.
    """
    if ef < k:
        raise SearchParameterError(f"ef ({ef}) must be at least k ({k})")
    fetch = min(k + len(flags), ef) if flags else k
    raw = search(index, query, fetch, ef)
    if not flags:
        return raw if fetch == k else SearchResult(ids=raw.ids[:k], distances=raw.distances[:k])
    kept = [(ext, d) for ext, d in zip(raw.ids, raw.distances) if ext not in flags][:k]
    return SearchResult(ids=tuple(e for e, _ in kept), distances=tuple(d for _, d in kept))


def delete_physical(index: GraphIndex, batch, flags: set[int] | None = None) -> GraphIndex:
    """Remove nodes and all edges referencing them; reclaim their slots.

    No edge repair is performed: survivors simply lose the edges that
    pointed at deleted nodes. If the entry point dies, the live node with
    the highest level (ties: smallest external id) takes over. Deleting a
    flagged id is allowed and clears its flag when `flags` is passed.
    """
    ids = _checked_batch(index, batch)
    doomed = np.zeros(index.vectors.shape[0], dtype=bool)
    for ext in ids:
        doomed[index.external_slot[ext]] = True

    for level in range(index.level_count):
        adj, deg = index.adj[level], index.deg[level]
        for slot in np.flatnonzero(index.node_level >= level):
            if doomed[slot]:
                continue
            row = adj[slot, : deg[slot]]
            kept = row[~doomed[row]]
            adj[slot, : kept.size] = kept
            deg[slot] = kept.size

    entry_died = index.entry_slot >= 0 and doomed[index.entry_slot]
    for ext in ids:
        slot = index.external_slot.pop(ext)
        index._release_slot(slot)
        if flags is not None:
            flags.discard(ext)

    if entry_died:
        index.entry_slot = _pick_entry(index)
    _trim_layers(index)
    return index


def _pick_entry(index: GraphIndex) -> int:
    if not index.external_slot:
        return -1
    best_slot = -1
    best = (-1, 0)  # (level, -external) maximized -> highest level, smallest id
    for ext, slot in index.external_slot.items():
        key = (int(index.node_level[slot]), -ext)
        if key > best:
            best = key
            best_slot = slot
    return best_slot


def _trim_layers(index: GraphIndex) -> None:
    top = int(index.node_level.max()) if index.external_slot else -1
    index.adj = index.adj[: top + 1]
    index.deg = index.deg[: top + 1]


def delete_rebuild(index: GraphIndex, batch, params=None) -> GraphIndex:
    """Drop the batch and reconstruct the graph from the survivors.

    Survivors are re-inserted in ascending external-id order, so with the
    same seed the result is bit-identical to a fresh construct over them.
    """
    ids = set(_checked_batch(index, batch))
    survivors = sorted(ext for ext in index.external_slot if ext not in ids)
    records = [(ext, index.vectors[index.external_slot[ext]]) for ext in survivors]
    rebuilt = construct(records, params or index.params)
    rebuilt.used_ids |= index.used_ids
    return rebuilt
