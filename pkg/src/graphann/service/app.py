"""FastAPI service wrapping the core index package.

Indexes live in process memory under a per-index lock (the library's
single-writer contract). Run with:

    uvicorn graphann.service.app:app
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException

from ..controller import ControllerParams, estimate_rebuild_period, select_policy
from ..datasets import load_index, save_index, synth_dataset
from ..deletion import (
    DeletionMethod,
    delete_logical,
    delete_physical,
    delete_rebuild,
    search_filtered,
)
from ..errors import DuplicateIdError, GraphAnnError, SnapshotError, UnknownIdError
from ..harness import ProtocolConfig, run_protocol
from ..index import GraphIndex, IndexParams, add, construct, search
from ..metrics import memory_usage
from . import schemas


@dataclass
class _Managed:
    index: GraphIndex
    flags: set[int] = field(default_factory=set)
    lock: threading.Lock = field(default_factory=threading.Lock)


def create_app() -> FastAPI:
    app = FastAPI(
        title="graphann",
        description="HNSW-style vector index with logical/physical/rebuild deletion",
        version="0.1.0",
    )
    registry: dict[str, _Managed] = {}

    def _get(name: str) -> _Managed:
        try:
            return registry[name]
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no index named {name!r}") from None

    def _info(name: str, managed: _Managed) -> schemas.IndexInfo:
        index, flags = managed.index, managed.flags
        entry = index.entry_point
        memory = memory_usage(index, flags)
        return schemas.IndexInfo(
            name=name,
            dimension=index.dimension,
            metric=index.metric,
            live_count=index.live_count,
            flagged_count=len(flags),
            level_count=index.level_count,
            entry_id=entry[0] if entry else None,
            memory=schemas.MemoryModel(**memory.__dict__),
        )

    @app.exception_handler(GraphAnnError)
    async def _domain_error(request, exc: GraphAnnError):
        from fastapi.responses import JSONResponse

        status = 404 if isinstance(exc, UnknownIdError) else 400
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "indexes": len(registry)}

    @app.post("/indexes", response_model=schemas.IndexInfo, status_code=201)
    def create_index(req: schemas.CreateIndexRequest) -> schemas.IndexInfo:
        if req.name in registry:
            raise HTTPException(status_code=409, detail=f"index {req.name!r} already exists")
        params = IndexParams(
            dimension=req.dimension,
            metric=req.metric,
            m=req.m,
            ef_construction=req.ef_construction,
            seed=req.seed,
        )
        records = [(r.id, np.asarray(r.vector, dtype=np.float32)) for r in req.records]
        registry[req.name] = _Managed(index=construct(records, params))
        return _info(req.name, registry[req.name])

    @app.get("/indexes", response_model=schemas.IndexListResponse)
    def list_indexes() -> schemas.IndexListResponse:
        return schemas.IndexListResponse(
            indexes=[_info(name, managed) for name, managed in sorted(registry.items())]
        )

    @app.get("/indexes/{name}", response_model=schemas.IndexInfo)
    def get_index(name: str) -> schemas.IndexInfo:
        return _info(name, _get(name))

    @app.delete("/indexes/{name}", status_code=204)
    def drop_index(name: str) -> None:
        _get(name)
        del registry[name]

    @app.post("/indexes/{name}/vectors", response_model=schemas.IndexInfo)
    def add_vectors(name: str, req: schemas.AddRequest) -> schemas.IndexInfo:
        managed = _get(name)
        with managed.lock:
            try:
                add(
                    managed.index,
                    [(r.id, np.asarray(r.vector, dtype=np.float32)) for r in req.records],
                )
            except DuplicateIdError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from None
        return _info(name, managed)

    @app.post("/indexes/{name}/search", response_model=schemas.SearchResponse)
    def search_index(name: str, req: schemas.SearchRequest) -> schemas.SearchResponse:
        managed = _get(name)
        query = np.asarray(req.vector, dtype=np.float32)
        with managed.lock:
            if req.include_flagged or not managed.flags:
                result = search(managed.index, query, req.k, req.ef)
            else:
                result = search_filtered(managed.index, managed.flags, query, req.k, req.ef)
        return schemas.SearchResponse(ids=list(result.ids), distances=list(result.distances))

    @app.post("/indexes/{name}/delete", response_model=schemas.IndexInfo)
    def delete_vectors(name: str, req: schemas.DeleteRequest) -> schemas.IndexInfo:
        managed = _get(name)
        method = DeletionMethod(req.method)
        with managed.lock:
            if method is DeletionMethod.LOGICAL:
                managed.flags = delete_logical(managed.index, managed.flags, req.ids)
            elif method is DeletionMethod.PHYSICAL:
                delete_physical(managed.index, req.ids, managed.flags)
            else:
                # rebuilding materializes logical deletions too: flagged ids
                # must not resurface in the reconstructed graph
                managed.index = delete_rebuild(managed.index, set(req.ids) | managed.flags)
                managed.flags = set()
        return _info(name, managed)

    @app.post("/indexes/{name}/snapshot", response_model=schemas.IndexInfo)
    def snapshot_index(name: str, req: schemas.SnapshotRequest) -> schemas.IndexInfo:
        managed = _get(name)
        with managed.lock:
            try:
                save_index(managed.index, managed.flags, req.path)
            except OSError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from None
        return _info(name, managed)

    @app.post("/indexes/load", response_model=schemas.IndexInfo, status_code=201)
    def load_snapshot(req: schemas.LoadIndexRequest) -> schemas.IndexInfo:
        if req.name in registry:
            raise HTTPException(status_code=409, detail=f"index {req.name!r} already exists")
        try:
            index, flags = load_index(req.path)
        except (SnapshotError, OSError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        registry[req.name] = _Managed(index=index, flags=flags)
        return _info(req.name, registry[req.name])

    @app.post("/estimates/rebuild-period", response_model=schemas.RebuildPeriodResponse)
    def rebuild_period(req: schemas.RebuildPeriodRequest) -> schemas.RebuildPeriodResponse:
        period = estimate_rebuild_period(
            req.baseline_recall, req.final_recall, req.steps, req.target_recall
        )
        return schemas.RebuildPeriodResponse(
            rebuild_period=period,
            recall_slope=(req.final_recall - req.baseline_recall) / req.steps,
        )

    @app.post("/estimates/policy", response_model=schemas.PolicyResponse)
    def policy(req: schemas.PolicyRequest) -> schemas.PolicyResponse:
        chosen = select_policy(
            ControllerParams(
                target_recall=req.target_recall,
                recall_floor=req.recall_floor,
                recall_slope=0.0,
                rebuild_period=req.rebuild_period,
                baseline_recall=1.0,
            )
        )
        return schemas.PolicyResponse(kind=chosen.kind, rebuild_period=chosen.rebuild_period)

    @app.post("/benchmarks", response_model=schemas.BenchmarkResponse)
    def benchmark(req: schemas.BenchmarkRequest) -> schemas.BenchmarkResponse:
        bundle = synth_dataset(
            n_o=req.n + req.steps * req.batch,
            d=req.dim,
            n_clusters=req.clusters,
            seed=req.seed,
            n_queries=req.queries,
        )
        cfg = ProtocolConfig(
            n=req.n,
            batch_size=req.batch,
            steps=req.steps,
            method=DeletionMethod(req.method),
            k=req.k,
            ef_search=req.ef_search,
            m=req.m,
            ef_construction=req.ef_construction,
            seed=req.seed,
        )
        metrics = run_protocol(bundle.base, bundle.queries, cfg)
        rows = [
            schemas.StepRow(
                step=m.step,
                method=m.method,
                recall=m.recall.recall,
                qps_search=m.qps_search.qps,
                qps_add=m.qps_add.qps if m.qps_add else None,
                qps_delete=m.qps_delete.qps if m.qps_delete else None,
                vector_bytes=m.memory.vector_bytes,
                adjacency_bytes=m.memory.adjacency_bytes,
                flag_bytes=m.memory.flag_bytes,
                total_bytes=m.memory.total_bytes,
                controller_event=m.controller_event,
            )
            for m in metrics
        ]
        return schemas.BenchmarkResponse(steps=rows)

    return app


app = create_app()
