"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class RecordModel(BaseModel):
    id: int = Field(ge=1, description="stable external id, never reused")
    vector: list[float]


class CreateIndexRequest(BaseModel):
    name: str = Field(min_length=1, max_length=128)
    dimension: int = Field(ge=1)
    metric: Literal["l2", "angular"] = "l2"
    m: int = Field(default=16, ge=2)
    ef_construction: int = Field(default=200, ge=1)
    seed: int = 0
    records: list[RecordModel] = Field(default_factory=list)


class MemoryModel(BaseModel):
    vector_bytes: int
    adjacency_bytes: int
    flag_bytes: int
    total_bytes: int


class IndexInfo(BaseModel):
    name: str
    dimension: int
    metric: str
    live_count: int
    flagged_count: int
    level_count: int
    entry_id: Optional[int] = None
    memory: MemoryModel


class IndexListResponse(BaseModel):
    indexes: list[IndexInfo]


class AddRequest(BaseModel):
    records: list[RecordModel] = Field(min_length=1)


class SearchRequest(BaseModel):
    vector: list[float]
    k: int = Field(default=10, ge=1)
    ef: int = Field(default=100, ge=1)
    include_flagged: bool = False


class SearchResponse(BaseModel):
    ids: list[int]
    distances: list[float]


class DeleteRequest(BaseModel):
    ids: list[int] = Field(min_length=1)
    method: Literal["logical", "physical", "rebuild"]


class SnapshotRequest(BaseModel):
    path: str


class LoadIndexRequest(BaseModel):
    path: str
    name: str = Field(min_length=1, max_length=128)


class RebuildPeriodRequest(BaseModel):
    baseline_recall: float = Field(gt=0, le=1)
    final_recall: float = Field(gt=0, le=1)
    steps: int = Field(ge=1)
    target_recall: float = Field(gt=0, le=1)


class RebuildPeriodResponse(BaseModel):
    rebuild_period: int
    recall_slope: float


class PolicyRequest(BaseModel):
    target_recall: float = Field(gt=0, le=1)
    recall_floor: float = Field(ge=0, le=1)
    rebuild_period: int = Field(default=0, ge=0)


class PolicyResponse(BaseModel):
    kind: Literal["physical_only", "logical_then_rebuild"]
    rebuild_period: Optional[int] = None


class BenchmarkRequest(BaseModel):
    """Small synthetic protocol run; sized for interactive use."""

    method: Literal["logical", "physical", "rebuild"]
    n: int = Field(default=2000, ge=16, le=20000)
    batch: int = Field(default=400, ge=1)
    steps: int = Field(default=3, ge=1)
    dim: int = Field(default=16, ge=1, le=512)
    clusters: int = Field(default=4, ge=1)
    queries: int = Field(default=50, ge=1, le=1000)
    k: int = Field(default=10, ge=1)
    ef_search: int = Field(default=64, ge=1)
    m: int = Field(default=16, ge=2)
    ef_construction: int = Field(default=100, ge=1)
    seed: int = 0


class StepRow(BaseModel):
    step: int
    method: str
    recall: float
    qps_search: float
    qps_add: Optional[float] = None
    qps_delete: Optional[float] = None
    vector_bytes: int
    adjacency_bytes: int
    flag_bytes: int
    total_bytes: int
    controller_event: str = ""


class BenchmarkResponse(BaseModel):
    steps: list[StepRow]
