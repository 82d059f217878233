"""graphann: an HNSW-style vector index with formalized deletion strategies.

The package bundles the index (construct/search/add), three deletion
methods (logical, physical, rebuild), benchmark metrics, a batch
insert/delete protocol harness, a recall-targeting deletion controller,
dataset tooling, a CLI, and a FastAPI service wrapping the index.
"""

from .controller import (
    ControllerParams,
    DeletionController,
    Policy,
    controlled_delete,
    estimate_rebuild_period,
    estimate_recall_floor,
    select_policy,
)
from .deletion import (
    DeletionMethod,
    delete_logical,
    delete_physical,
    delete_rebuild,
    search_filtered,
)
from .errors import (
    AlreadyFlaggedError,
    ConfigError,
    DatasetFormatError,
    DimensionMismatchError,
    DuplicateIdError,
    EmptyIndexError,
    GraphAnnError,
    SearchParameterError,
    SnapshotError,
    UnknownIdError,
)
from .harness import (
    GroundTruth,
    ProtocolConfig,
    StepMetrics,
    deletion_ids,
    emit_results,
    ground_truth_oracle,
    insertion_ids,
    run_protocol,
)
from .index import (
    GraphIndex,
    IndexParams,
    SearchResult,
    VectorRecord,
    add,
    construct,
    distance,
    search,
)
from .metrics import (
    CurvePoint,
    MemoryReport,
    RecallReport,
    ThroughputReport,
    memory_usage,
    qps,
    qps_recall_curve,
    recall_at_k,
)

__version__ = "0.1.0"

__all__ = [
    "AlreadyFlaggedError",
    "ConfigError",
    "ControllerParams",
    "CurvePoint",
    "DatasetFormatError",
    "DeletionController",
    "DeletionMethod",
    "DimensionMismatchError",
    "DuplicateIdError",
    "EmptyIndexError",
    "GraphAnnError",
    "GraphIndex",
    "GroundTruth",
    "IndexParams",
    "MemoryReport",
    "Policy",
    "ProtocolConfig",
    "RecallReport",
    "SearchParameterError",
    "SearchResult",
    "SnapshotError",
    "StepMetrics",
    "ThroughputReport",
    "UnknownIdError",
    "VectorRecord",
    "add",
    "construct",
    "controlled_delete",
    "delete_logical",
    "delete_physical",
    "delete_rebuild",
    "deletion_ids",
    "distance",
    "emit_results",
    "estimate_rebuild_period",
    "estimate_recall_floor",
    "ground_truth_oracle",
    "insertion_ids",
    "memory_usage",
    "qps",
    "qps_recall_curve",
    "recall_at_k",
    "run_protocol",
    "search",
    "search_filtered",
    "select_policy",
]
