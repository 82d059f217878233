"""Numba-compiled graph traversal kernels.

These operate on the raw slot-indexed arrays owned by GraphIndex: a float32
vector matrix, an int32 adjacency cube (level x slot x neighbor) with a
degree matrix, and reusable scratch buffers. Keeping the inner loops here is
what makes a pure-Python HNSW fast enough for the benchmark harness.

Ordering convention everywhere: ascending (distance, external id), so equal
distances resolve toward the smaller external id and runs are reproducible.
"""

import numpy as np
from numba import njit

# Distances are accumulated in float64 over float32 components, summed in
# storage order. The public distance() wrapper reuses squared_distance_pair
# so reported search distances match standalone evaluations bit for bit.


@njit(cache=True, inline="always")
def squared_distance(vectors, slot, query):
    acc = 0.0
    for i in range(query.shape[0]):
        d = np.float64(vectors[slot, i]) - np.float64(query[i])
        acc += d * d
    return acc


@njit(cache=True)
def squared_distance_pair(a, b):
    acc = 0.0
    for i in range(a.shape[0]):
        d = np.float64(a[i]) - np.float64(b[i])
        acc += d * d
    return acc


@njit(cache=True)
def greedy_descend(vectors, adj, deg, query, start, start_dist):
    """Hill-climb to the locally nearest node in one layer (beam width 1)."""
    best = start
    best_dist = start_dist
    improved = True
    while improved:
        improved = False
        cur = best
        for j in range(deg[cur]):
            nb = adj[cur, j]
            d = squared_distance(vectors, nb, query)
            if d < best_dist:
                best = nb
                best_dist = d
                improved = True
    return best, best_dist


@njit(cache=True, inline="always")
def _min_heap_push(heap_d, heap_s, n, d, s):
    heap_d[n] = d
    heap_s[n] = s
    i = n
    while i > 0:
        parent = (i - 1) >> 1
        if heap_d[parent] <= heap_d[i]:
            break
        heap_d[parent], heap_d[i] = heap_d[i], heap_d[parent]
        heap_s[parent], heap_s[i] = heap_s[i], heap_s[parent]
        i = parent
    return n + 1


@njit(cache=True, inline="always")
def _min_heap_pop(heap_d, heap_s, n):
    top_d = heap_d[0]
    top_s = heap_s[0]
    n -= 1
    heap_d[0] = heap_d[n]
    heap_s[0] = heap_s[n]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= n:
            break
        child = left
        right = left + 1
        if right < n and heap_d[right] < heap_d[left]:
            child = right
        if heap_d[i] <= heap_d[child]:
            break
        heap_d[i], heap_d[child] = heap_d[child], heap_d[i]
        heap_s[i], heap_s[child] = heap_s[child], heap_s[i]
        i = child
    return top_d, top_s, n


@njit(cache=True, inline="always")
def _max_heap_push(heap_d, heap_s, n, d, s):
    heap_d[n] = d
    heap_s[n] = s
    i = n
    while i > 0:
        parent = (i - 1) >> 1
        if heap_d[parent] >= heap_d[i]:
            break
        heap_d[parent], heap_d[i] = heap_d[i], heap_d[parent]
        heap_s[parent], heap_s[i] = heap_s[i], heap_s[parent]
        i = parent
    return n + 1


@njit(cache=True, inline="always")
def _max_heap_replace_root(heap_d, heap_s, n, d, s):
    heap_d[0] = d
    heap_s[0] = s
    i = 0
    while True:
        left = 2 * i + 1
        if left >= n:
            break
        child = left
        right = left + 1
        if right < n and heap_d[right] > heap_d[left]:
            child = right
        if heap_d[i] >= heap_d[child]:
            break
        heap_d[i], heap_d[child] = heap_d[child], heap_d[i]
        heap_s[i], heap_s[child] = heap_s[child], heap_s[i]
        i = child
    return n


@njit(cache=True)
def search_layer(vectors, adj, deg, query, entry_slots, entry_dists, ef,
                 visited, stamp, cand_d, cand_s):
    """Best-first beam search inside one layer.

    Returns up to ef (distance, slot) pairs in heap order; callers sort and
    apply tie-breaking. `visited` is a persistent stamp array reused across
    calls; `cand_d`/`cand_s` are persistent heap scratch.
    """
    res_d = np.empty(ef, np.float64)
    res_s = np.empty(ef, np.int32)
    res_n = 0
    cand_n = 0
    for i in range(entry_slots.shape[0]):
        s = entry_slots[i]
        if visited[s] == stamp:
            continue
        visited[s] = stamp
        d = entry_dists[i]
        cand_n = _min_heap_push(cand_d, cand_s, cand_n, d, s)
        if res_n < ef:
            res_n = _max_heap_push(res_d, res_s, res_n, d, s)
        elif d < res_d[0]:
            _max_heap_replace_root(res_d, res_s, res_n, d, s)
    while cand_n > 0:
        d, s, cand_n = _min_heap_pop(cand_d, cand_s, cand_n)
        if res_n >= ef and d > res_d[0]:
            break
        for j in range(deg[s]):
            nb = adj[s, j]
            if visited[nb] == stamp:
                continue
            visited[nb] = stamp
            dnb = squared_distance(vectors, nb, query)
            if res_n < ef:
                cand_n = _min_heap_push(cand_d, cand_s, cand_n, dnb, nb)
                res_n = _max_heap_push(res_d, res_s, res_n, dnb, nb)
            elif dnb < res_d[0]:
                cand_n = _min_heap_push(cand_d, cand_s, cand_n, dnb, nb)
                _max_heap_replace_root(res_d, res_s, res_n, dnb, nb)
    return res_d[:res_n], res_s[:res_n]


@njit(cache=True, inline="always")
def _rank_by_dist_then_ext(dists, slots, n, slot_external, order):
    """Fill order[:n] with indices sorted by (distance, external id)."""
    for i in range(n):
        order[i] = i
    for i in range(1, n):
        key = order[i]
        kd = dists[key]
        ke = slot_external[slots[key]]
        j = i - 1
        while j >= 0:
            o = order[j]
            od = dists[o]
            if od < kd or (od == kd and slot_external[slots[o]] <= ke):
                break
            order[j + 1] = o
            j -= 1
        order[j + 1] = key


@njit(cache=True, inline="always")
def _heuristic_select(vectors, cand_slots, cand_dists, n, cap, out_slots):
    """Diversity-aware neighbor selection (standard HNSW heuristic).

    Scans candidates in ascending (distance-to-base, external id) order and
    keeps one only if it is closer to the base than to every neighbor kept
    so far; remaining capacity is backfilled with the nearest discarded
    candidates so degrees stay full. Writes slots into out_slots, returns
    the count.
    """
    kept = np.zeros(n, np.uint8)
    cnt = 0
    for i in range(n):
        if cnt == cap:
            break
        c = cand_slots[i]
        dc = cand_dists[i]
        ok = True
        for j in range(cnt):
            if squared_distance_pair(vectors[c], vectors[out_slots[j]]) < dc:
                ok = False
                break
        if ok:
            kept[i] = 1
            out_slots[cnt] = c
            cnt += 1
    if cnt < cap:
        for i in range(n):
            if cnt == cap:
                break
            if kept[i] == 0:
                out_slots[cnt] = cand_slots[i]
                cnt += 1
    return cnt


@njit(cache=True, inline="always")
def _link_back(vectors, adj_level, deg_level, slot_external, nb, new_slot, cap):
    """Add a back edge nb -> new_slot, re-selecting neighbors if full."""
    n = deg_level[nb]
    if n < cap:
        adj_level[nb, n] = new_slot
        deg_level[nb] = n + 1
        return
    cand = np.empty(n + 1, np.int32)
    cand_d = np.empty(n + 1, np.float64)
    for j in range(n):
        cand[j] = adj_level[nb, j]
        cand_d[j] = squared_distance_pair(vectors[nb], vectors[adj_level[nb, j]])
    cand[n] = new_slot
    cand_d[n] = squared_distance_pair(vectors[nb], vectors[new_slot])
    order = np.empty(n + 1, np.int32)
    _rank_by_dist_then_ext(cand_d, cand, n + 1, slot_external, order)
    sorted_slots = np.empty(n + 1, np.int32)
    sorted_dists = np.empty(n + 1, np.float64)
    for j in range(n + 1):
        sorted_slots[j] = cand[order[j]]
        sorted_dists[j] = cand_d[order[j]]
    row = np.empty(cap, np.int32)
    cnt = _heuristic_select(vectors, sorted_slots, sorted_dists, n + 1, cap, row)
    for j in range(cnt):
        adj_level[nb, j] = row[j]
    deg_level[nb] = cnt


@njit(cache=True)
def insert_node(vectors, adj, deg, slot_external, slot, level, entry_slot,
                entry_level, m, m0, ef, visited, stamp, cand_d, cand_s):
    """Wire one new node into the graph (the index must not be empty).

    Greedy-descends from the entry point through layers above `level`, then
    runs a beam search per layer from min(level, entry_level) down to 0,
    connecting the node to heuristically selected candidates and
    back-linking them.
    """
    query = vectors[slot]
    cur = entry_slot
    cur_dist = squared_distance(vectors, cur, query)
    for lvl in range(entry_level, level, -1):
        cur, cur_dist = greedy_descend(vectors, adj[lvl], deg[lvl], query, cur, cur_dist)

    ep_slots = np.empty(1, np.int32)
    ep_dists = np.empty(1, np.float64)
    ep_slots[0] = cur
    ep_dists[0] = cur_dist
    top = min(level, entry_level)
    for lvl in range(top, -1, -1):
        stamp += 1
        res_d, res_s = search_layer(
            vectors, adj[lvl], deg[lvl], query, ep_slots, ep_dists, ef,
            visited, stamp, cand_d, cand_s,
        )
        n = res_d.shape[0]
        order = np.empty(n, np.int32)
        _rank_by_dist_then_ext(res_d, res_s, n, slot_external, order)
        ranked_slots = np.empty(n, np.int32)
        ranked_dists = np.empty(n, np.float64)
        for j in range(n):
            ranked_slots[j] = res_s[order[j]]
            ranked_dists[j] = res_d[order[j]]
        cap = m0 if lvl == 0 else m
        row = np.empty(cap, np.int32)
        n_sel = _heuristic_select(vectors, ranked_slots, ranked_dists, n, cap, row)
        for j in range(n_sel):
            adj[lvl, slot, j] = row[j]
            _link_back(vectors, adj[lvl], deg[lvl], slot_external, row[j], slot, cap)
        deg[lvl, slot] = n_sel
        ep_slots = ranked_slots
        ep_dists = ranked_dists
    return stamp
