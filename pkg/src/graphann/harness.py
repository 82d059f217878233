"""Batch insert/delete benchmark protocol with per-step metric capture.

One run constructs an index over the first n base vectors, then performs S
update steps. Step s deletes the b consecutive external ids
{1+(s-1)b, ..., sb}, inserts the b base vectors with ids
{1+n+(s-1)b, ..., n+sb}, recomputes exact ground truth over the visible
point set, and records recall, per-operation throughput, memory accounting,
and (optionally) a QPS-Recall curve. Everything runs on one thread.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace

import numpy as np

from .deletion import DeletionMethod, delete_logical, delete_physical, delete_rebuild
from .errors import ConfigError
from .index import GraphIndex, IndexParams, VectorRecord, add, construct
from .metrics import (
    CurvePoint,
    MemoryReport,
    RecallReport,
    ThroughputReport,
    memory_usage,
    qps_recall_curve,
    recall_at_k,
    throughput,
    timed_search_batch,
)

CSV_COLUMNS = (
    "step",
    "method",
    "recall",
    "qps_search",
    "qps_add",
    "qps_delete",
    "vector_bytes",
    "adjacency_bytes",
    "flag_bytes",
    "total_bytes",
)
CURVE_COLUMNS = ("step", "method", "ef", "recall", "qps")


@dataclass
class ProtocolConfig:
    """One benchmark run: working size n, batch size b, S update steps."""

    n: int
    batch_size: int
    steps: int
    method: object  # DeletionMethod or a controller exposing .apply/.label
    k: int = 10
    ef_search: int = 100
    m: int = 16
    ef_construction: int = 200
    metric: str = "l2"
    seed: int = 0
    curve_ladder: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")
        if self.steps < 1:
            raise ConfigError("step count must be >= 1")
        if self.steps * self.batch_size > self.n:
            raise ConfigError(
                f"steps*batch ({self.steps * self.batch_size}) exceeds n ({self.n}); "
                "deletion targets must come from the initially constructed ids"
            )
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.ef_search < self.k:
            raise ConfigError(f"ef_search ({self.ef_search}) must be >= k ({self.k})")

    def index_params(self, dimension: int) -> IndexParams:
        return IndexParams(
            dimension=dimension,
            metric=self.metric,
            m=self.m,
            ef_construction=self.ef_construction,
            seed=self.seed,
        )

    def with_method(self, method) -> "ProtocolConfig":
        return replace(self, method=method)


@dataclass(frozen=True)
class GroundTruth:
    """Exact nearest neighbors over the visible point set after one step."""

    step: int
    nearest: tuple[int, ...]  # one true nearest id per query
    top_k: tuple[tuple[int, ...], ...]  # exact k nearest per query


@dataclass(frozen=True)
class StepMetrics:
    step: int
    method: str
    recall: RecallReport
    qps_search: ThroughputReport
    memory: MemoryReport
    qps_add: ThroughputReport | None = None
    qps_delete: ThroughputReport | None = None
    curve: tuple[CurvePoint, ...] = ()
    controller_event: str = ""


def deletion_ids(step: int, batch_size: int) -> range:
    """External ids deleted at update step s: {1+(s-1)b, ..., sb}."""
    return range(1 + (step - 1) * batch_size, step * batch_size + 1)


def insertion_ids(step: int, n: int, batch_size: int) -> range:
    """External ids inserted at update step s: {1+n+(s-1)b, ..., n+sb}."""
    return range(1 + n + (step - 1) * batch_size, n + step * batch_size + 1)


def ground_truth_oracle(points, queries, k: int, metric: str = "l2", step: int = 0) -> GroundTruth:
    """Exact k-NN by linear scan; ties break toward the smaller external id."""
    records = [(int(p.external_id), p.vector) if isinstance(p, VectorRecord) else p for p in points]
    if not records:
        raise ValueError("ground truth needs a non-empty point set")
    ids = np.array([ext for ext, _ in records], dtype=np.int64)
    matrix = np.stack([np.asarray(v, dtype=np.float32) for _, v in records])
    return _oracle_from_arrays(ids, matrix, np.asarray(queries, dtype=np.float32), k, metric, step)


def _oracle_from_arrays(ids, matrix, queries, k, metric, step) -> GroundTruth:
    if queries.ndim == 1:
        queries = queries[None, :]
    if matrix.shape[1] != queries.shape[1]:
        raise ValueError(
            f"point dimension {matrix.shape[1]} != query dimension {queries.shape[1]}"
        )
    p = matrix.astype(np.float64)
    q = queries.astype(np.float64)
    if metric == "angular":
        p = p / np.linalg.norm(p, axis=1, keepdims=True)
        q = q / np.linalg.norm(q, axis=1, keepdims=True)
    # squared distances via the expanded form; exact ties only arise from
    # bit-identical points, which stay exactly tied here
    d2 = np.maximum(
        (q * q).sum(1)[:, None] - 2.0 * (q @ p.T) + (p * p).sum(1)[None, :], 0.0
    )
    kk = min(k, ids.shape[0])
    nearest = []
    top_k = []
    for row in d2:
        order = np.lexsort((ids, row))[:kk]
        ranked = ids[order]
        nearest.append(int(ranked[0]))
        top_k.append(tuple(int(i) for i in ranked))
    return GroundTruth(step=step, nearest=tuple(nearest), top_k=tuple(top_k))


def _method_label(method) -> str:
    if isinstance(method, DeletionMethod):
        return method.value
    return getattr(method, "label", "controller")


def run_protocol(base, queries, cfg: ProtocolConfig, initial_index: GraphIndex | None = None) -> list[StepMetrics]:
    """Run the full protocol and return one StepMetrics per step (incl. 0).

    `base` must hold at least n + S*b records whose external ids are
    1..len(base) in order. `initial_index` may carry a prebuilt index equal
    to construct(base[:n]) so paired runs can share one build; it is copied,
    never mutated.
    """
    records = [_as_record(i, rec) for i, rec in enumerate(base)]
    queries = np.asarray(queries, dtype=np.float32)
    if queries.ndim == 1:
        queries = queries[None, :]
    if queries.shape[0] == 0:
        raise ConfigError("protocol needs a non-empty query set")
    need = cfg.n + cfg.steps * cfg.batch_size
    if len(records) < need:
        raise ConfigError(
            f"dataset too small: need n + steps*batch = {need} base vectors, got {len(records)}"
        )

    dimension = records[0].vector.shape[0]
    params = cfg.index_params(dimension)
    if initial_index is not None:
        index = initial_index.copy()
    else:
        index = construct(records[: cfg.n], params)
    flags: set[int] = set()
    label = _method_label(cfg.method)
    by_id = {rec.external_id: rec for rec in records}

    banner = cfg.method.describe() if hasattr(cfg.method, "describe") else ""
    out = [_capture_step(index, flags, queries, cfg, 0, label, None, None, banner)]
    for s in range(1, cfg.steps + 1):
        batch = set(deletion_ids(s, cfg.batch_size))
        event = ""
        t0 = time.perf_counter()
        if cfg.method is DeletionMethod.LOGICAL:
            flags = delete_logical(index, flags, batch)
        elif cfg.method is DeletionMethod.PHYSICAL:
            delete_physical(index, batch)
        elif cfg.method is DeletionMethod.REBUILD:
            index = delete_rebuild(index, batch)
        else:
            index, flags, event = cfg.method.apply(index, flags, batch)
        delete_tput = throughput("delete", len(batch), time.perf_counter() - t0)

        additions = [by_id[i] for i in insertion_ids(s, cfg.n, cfg.batch_size)]
        t0 = time.perf_counter()
        add(index, additions)
        add_tput = throughput("add", len(additions), time.perf_counter() - t0)

        visible = index.live_count - len(flags)
        if visible != cfg.n:
            raise RuntimeError(
                f"protocol violation at step {s}: visible count {visible} != n {cfg.n}"
            )
        out.append(_capture_step(index, flags, queries, cfg, s, label, add_tput, delete_tput, event))
    return out


def _as_record(position: int, rec) -> VectorRecord:
    if isinstance(rec, VectorRecord):
        expected = position + 1
        if rec.external_id != expected:
            raise ConfigError(
                f"base record at position {position} has id {rec.external_id}; "
                f"the protocol requires ids 1..n_o in file order (expected {expected})"
            )
        return rec
    return VectorRecord(external_id=position + 1, vector=np.asarray(rec, dtype=np.float32))


def _capture_step(index, flags, queries, cfg, step, label, add_tput, delete_tput, event) -> StepMetrics:
    visible_ids, visible_matrix = _visible_arrays(index, flags)
    truth = _oracle_from_arrays(visible_ids, visible_matrix, queries, cfg.k, cfg.metric, step)
    results, search_tput = timed_search_batch(index, flags, queries, cfg.k, cfg.ef_search)
    recall = recall_at_k(results, truth.nearest, cfg.k)
    curve = ()
    if cfg.curve_ladder:
        curve = tuple(
            qps_recall_curve(index, flags, queries, truth.nearest, cfg.k, cfg.curve_ladder)
        )
    return StepMetrics(
        step=step,
        method=label,
        recall=recall,
        qps_search=search_tput,
        memory=memory_usage(index, flags),
        qps_add=add_tput,
        qps_delete=delete_tput,
        curve=curve,
        controller_event=event,
    )


def _visible_arrays(index: GraphIndex, flags: set[int]) -> tuple[np.ndarray, np.ndarray]:
    """The queryable universe: live ids minus flagged, with their vectors.

    Index vectors are stored post-normalization for the angular metric, which
    matches how the oracle normalizes its inputs.
    """
    items = [(ext, slot) for ext, slot in index.external_slot.items() if ext not in flags]
    items.sort()
    ids = np.array([ext for ext, _ in items], dtype=np.int64)
    slots = np.array([slot for _, slot in items], dtype=np.int64)
    return ids, index.vectors[slots]


# -- result emission -------------------------------------------------------


def emit_results(metrics: list[StepMetrics], out_dir, plots: bool = False) -> list[str]:
    """Write steps.csv (one row per step), curves.csv (one row per curve
    point), and optional SVG line plots. Returns the written paths.

    Numeric cells are written with repr so a round-trip through the CSV
    recovers identical values; step-0 rows leave the add/delete throughput
    cells empty.
    """
    if not metrics:
        raise ValueError("no metrics to emit")
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    with_events = any(m.controller_event for m in metrics)
    columns = CSV_COLUMNS + (("controller_event",) if with_events else ())
    steps_path = out / "steps.csv"
    with open(steps_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for m in metrics:
            row = [
                m.step,
                m.method,
                repr(m.recall.recall),
                repr(m.qps_search.qps),
                repr(m.qps_add.qps) if m.qps_add else "",
                repr(m.qps_delete.qps) if m.qps_delete else "",
                m.memory.vector_bytes,
                m.memory.adjacency_bytes,
                m.memory.flag_bytes,
                m.memory.total_bytes,
            ]
            if with_events:
                row.append(m.controller_event)
            writer.writerow(row)
    written.append(str(steps_path))

    curve_rows = [
        (m.step, m.method, pt.ef, repr(pt.recall), repr(pt.qps))
        for m in metrics
        for pt in m.curve
    ]
    if curve_rows:
        curves_path = out / "curves.csv"
        with open(curves_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CURVE_COLUMNS)
            writer.writerows(curve_rows)
        written.append(str(curves_path))

    if plots:
        written.extend(_write_plots(metrics, out))
    return written


def _write_plots(metrics: list[StepMetrics], out) -> list[str]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    by_method: dict[str, list[StepMetrics]] = {}
    for m in metrics:
        by_method.setdefault(m.method, []).append(m)

    families = {
        "recall": lambda m: m.recall.recall,
        "qps_search": lambda m: m.qps_search.qps,
        "qps_add": lambda m: m.qps_add.qps if m.qps_add else None,
        "qps_delete": lambda m: m.qps_delete.qps if m.qps_delete else None,
        "memory": lambda m: m.memory.total_bytes,
    }
    paths = []
    for family, pick in families.items():
        fig, ax = plt.subplots(figsize=(6, 4))
        for method, rows in by_method.items():
            xs = [m.step for m in rows if pick(m) is not None]
            ys = [pick(m) for m in rows if pick(m) is not None]
            if xs:
                ax.plot(xs, ys, marker="o", label=method)
        ax.set_xlabel("step")
        ax.set_ylabel(family)
        if family.startswith("qps"):
            ax.set_yscale("log")
        ax.legend()
        fig.tight_layout()
        path = out / f"{family}.svg"
        fig.savefig(path)
        plt.close(fig)
        paths.append(str(path))

    if any(m.curve for m in metrics):
        fig, ax = plt.subplots(figsize=(6, 4))
        for method, rows in by_method.items():
            last = max((m for m in rows if m.curve), key=lambda m: m.step, default=None)
            if last:
                ax.plot(
                    [p.recall for p in last.curve],
                    [p.qps for p in last.curve],
                    marker="o",
                    label=f"{method} (step {last.step})",
                )
        ax.set_xlabel("1-recall@k")
        ax.set_ylabel("qps_search")
        ax.set_yscale("log")
        ax.legend()
        fig.tight_layout()
        path = out / "qps_recall_curve.svg"
        fig.savefig(path)
        plt.close(fig)
        paths.append(str(path))
    return paths
