"""Dataset loading, synthetic data generation, and index snapshots.

File formats follow the TEXMEX corpus layout: every vector is a 4-byte
little-endian int32 dimension header followed by the components (float32
for fvecs, uint8 for bvecs, int32 for ivecs). Index snapshots use a custom
binary container with a magic header, version, and CRC32 so corruption is
detected instead of yielding a partial index.
"""

from __future__ import annotations

import io
import json
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DatasetFormatError, SnapshotError
from .index import GraphIndex, IndexParams, VectorRecord

SNAPSHOT_MAGIC = b"GANN"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class DatasetBundle:
    """Base records (ids 1..n in file order), query vectors, and metric."""

    name: str
    metric: str
    base: list[VectorRecord]
    queries: np.ndarray


# -- TEXMEX vector files ----------------------------------------------------


def _read_vecs(path, scalar_dtype, scalar_size) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) == 0:
        return np.zeros((0, 0), dtype=scalar_dtype)
    if len(raw) < 4:
        raise DatasetFormatError(f"{path}: truncated file (no dimension header)")
    d = int(np.frombuffer(raw[:4], dtype="<i4")[0])
    if d < 1:
        raise DatasetFormatError(f"{path}: invalid dimension {d}")
    record = 4 + d * scalar_size
    if len(raw) % record != 0:
        raise DatasetFormatError(
            f"{path}: size {len(raw)} is not a multiple of the {record}-byte record"
        )
    n = len(raw) // record
    body = np.frombuffer(raw, dtype=np.uint8).reshape(n, record)
    headers = body[:, :4].copy().view("<i4").ravel()
    if not (headers == d).all():
        raise DatasetFormatError(f"{path}: inconsistent dimension headers")
    return body[:, 4:].copy().view(scalar_dtype).reshape(n, d)


def load_fvecs(path) -> np.ndarray:
    """Read float32 vectors; returns an (n, d) array."""
    return _read_vecs(path, "<f4", 4)


def load_bvecs(path) -> np.ndarray:
    """Read uint8 vectors; returns an (n, d) array."""
    return _read_vecs(path, np.uint8, 1)


def load_ivecs(path) -> np.ndarray:
    """Read int32 vectors (e.g. ground-truth id lists); returns (n, d)."""
    return _read_vecs(path, "<i4", 4)


def _write_vecs(path, matrix, scalar_dtype) -> None:
    arr = np.asarray(matrix)
    if arr.ndim != 2:
        raise DatasetFormatError(f"expected a 2-d array, got shape {arr.shape}")
    n, d = arr.shape
    with open(path, "wb") as fh:
        header = np.full(n, d, dtype="<i4")
        body = arr.astype(scalar_dtype, copy=False)
        for i in range(n):
            fh.write(header[i].tobytes())
            fh.write(body[i].tobytes())


def write_fvecs(path, matrix) -> None:
    _write_vecs(path, matrix, "<f4")


def write_bvecs(path, matrix) -> None:
    _write_vecs(path, matrix, np.uint8)


def write_ivecs(path, matrix) -> None:
    _write_vecs(path, matrix, "<i4")


def convert_glove(text_path, out_path) -> int:
    """Convert a Glove-style text embedding file (token v1 v2 ...) to fvecs.

    Returns the number of vectors written. Raises DatasetFormatError on
    ragged dimensions or unparsable lines.
    """
    vectors = []
    d = None
    with open(text_path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                raise DatasetFormatError(f"{text_path}:{line_no}: no vector components")
            try:
                vec = [float(x) for x in parts[1:]]
            except ValueError as exc:
                raise DatasetFormatError(f"{text_path}:{line_no}: {exc}") from None
            if d is None:
                d = len(vec)
            elif len(vec) != d:
                raise DatasetFormatError(
                    f"{text_path}:{line_no}: dimension {len(vec)} != {d}"
                )
            vectors.append(vec)
    if not vectors:
        write_fvecs(out_path, np.zeros((0, 1), dtype=np.float32)[:0])
        return 0
    write_fvecs(out_path, np.array(vectors, dtype=np.float32))
    return len(vectors)


# -- synthetic data ----------------------------------------------------------


def synth_dataset(
    n_o: int,
    d: int,
    n_clusters: int = 8,
    seed: int = 0,
    n_queries: int = 200,
    center_scale: float = 1.0,
    noise_scale: float = 1.0,
) -> DatasetBundle:
    """Deterministic Gaussian-mixture dataset; queries come from the same
    mixture. Ids are 1..n_o in generation order."""
    if n_o < 1 or d < 1:
        raise ValueError(f"n_o and d must be >= 1, got n_o={n_o}, d={d}")
    if n_clusters < 1:
        raise ValueError(f"n_clusters must be >= 1, got {n_clusters}")
    if n_queries < 1:
        raise ValueError(f"n_queries must be >= 1, got {n_queries}")
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, center_scale, (n_clusters, d))
    base = centers[rng.integers(0, n_clusters, n_o)] + rng.normal(0.0, noise_scale, (n_o, d))
    queries = centers[rng.integers(0, n_clusters, n_queries)] + rng.normal(
        0.0, noise_scale, (n_queries, d)
    )
    base = base.astype(np.float32)
    records = [VectorRecord(i + 1, base[i]) for i in range(n_o)]
    return DatasetBundle(
        name=f"synth-n{n_o}-d{d}-c{n_clusters}-s{seed}",
        metric="l2",
        base=records,
        queries=queries.astype(np.float32),
    )


def bundle_from_files(base_path, query_path, metric: str = "l2", name: str | None = None) -> DatasetBundle:
    """Load base + query fvecs files into a bundle with ids 1..n."""
    base = load_fvecs(base_path)
    queries = load_fvecs(query_path)
    if len(base) == 0:
        raise DatasetFormatError(f"{base_path}: empty base set")
    if len(queries) and queries.shape[1] != base.shape[1]:
        raise DatasetFormatError(
            f"query dimension {queries.shape[1]} != base dimension {base.shape[1]}"
        )
    records = [VectorRecord(i + 1, base[i]) for i in range(len(base))]
    return DatasetBundle(
        name=name or Path(base_path).stem, metric=metric, base=records, queries=queries
    )


# -- index snapshots ---------------------------------------------------------


def save_index(index: GraphIndex, flags: set[int], path) -> None:
    """Write a versioned, checksummed snapshot of the index plus flag set."""
    buf = io.BytesIO()
    meta = {
        "dimension": index.params.dimension,
        "metric": index.params.metric,
        "m": index.params.m,
        "ef_construction": index.params.ef_construction,
        "seed": index.params.seed,
        "entry_slot": int(index.entry_slot),
        "next_slot": int(index.next_slot),
        "rng_state": index.rng.bit_generator.state,
    }
    meta_bytes = json.dumps(meta).encode("utf-8")
    buf.write(len(meta_bytes).to_bytes(8, "little"))
    buf.write(meta_bytes)
    n = index.next_slot
    for arr in (
        index.vectors[:n],
        index.node_level[:n],
        index.slot_external[:n],
        index.adj[:, :n, :],
        index.deg[:, :n],
        np.array(sorted(flags), dtype=np.int64),
        np.array(sorted(index.free_slots), dtype=np.int64),
        np.array(sorted(index.used_ids), dtype=np.int64),
    ):
        np.save(buf, np.ascontiguousarray(arr), allow_pickle=False)
    payload = buf.getvalue()
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(SNAPSHOT_VERSION.to_bytes(4, "little"))
        fh.write(len(payload).to_bytes(8, "little"))
        fh.write(zlib.crc32(payload).to_bytes(4, "little"))
        fh.write(payload)


def load_index(path) -> tuple[GraphIndex, set[int]]:
    """Read a snapshot back; raises SnapshotError on any corruption."""
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != SNAPSHOT_MAGIC:
        raise SnapshotError(f"{path}: not a graphann index snapshot")
    version = int.from_bytes(raw[4:8], "little")
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"{path}: snapshot version {version} is not supported")
    length = int.from_bytes(raw[8:16], "little")
    crc = int.from_bytes(raw[16:20], "little")
    payload = raw[20:]
    if len(payload) != length:
        raise SnapshotError(f"{path}: truncated snapshot ({len(payload)} of {length} bytes)")
    if zlib.crc32(payload) != crc:
        raise SnapshotError(f"{path}: checksum mismatch, snapshot is corrupt")

    buf = io.BytesIO(payload)
    meta_len = int.from_bytes(buf.read(8), "little")
    try:
        meta = json.loads(buf.read(meta_len).decode("utf-8"))
        vectors = np.load(buf, allow_pickle=False)
        node_level = np.load(buf, allow_pickle=False)
        slot_external = np.load(buf, allow_pickle=False)
        adj = np.load(buf, allow_pickle=False)
        deg = np.load(buf, allow_pickle=False)
        flag_arr = np.load(buf, allow_pickle=False)
        free_arr = np.load(buf, allow_pickle=False)
        used_arr = np.load(buf, allow_pickle=False)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"{path}: malformed snapshot payload: {exc}") from None

    params = IndexParams(
        dimension=int(meta["dimension"]),
        metric=meta["metric"],
        m=int(meta["m"]),
        ef_construction=int(meta["ef_construction"]),
        seed=int(meta["seed"]),
    )
    n = int(meta["next_slot"])
    index = GraphIndex(params, capacity=max(n, 8))
    index.vectors[:n] = vectors
    index.node_level[:n] = node_level
    index.slot_external[:n] = slot_external
    cap = index.vectors.shape[0]
    levels = adj.shape[0]
    index.adj = np.zeros((levels, cap, params.m0), dtype=np.int32)
    index.adj[:, :n, :] = adj
    index.deg = np.zeros((levels, cap), dtype=np.int32)
    index.deg[:, :n] = deg
    index.next_slot = n
    index.entry_slot = int(meta["entry_slot"])
    index.free_slots = [int(s) for s in free_arr]
    index.used_ids = set(int(i) for i in used_arr)
    index.external_slot = {
        int(slot_external[s]): s for s in range(n) if node_level[s] >= 0
    }
    index.rng.bit_generator.state = meta["rng_state"]
    return index, set(int(i) for i in flag_arr)
