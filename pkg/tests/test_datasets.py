"""Dataset files, synthetic data, and index snapshots."""

import numpy as np
import pytest

from graphann.datasets import (
    bundle_from_files,
    convert_glove,
    load_bvecs,
    load_fvecs,
    load_ivecs,
    load_index,
    save_index,
    synth_dataset,
    write_bvecs,
    write_fvecs,
    write_ivecs,
)
from graphann.deletion import delete_logical, delete_physical
from graphann.errors import DatasetFormatError, SnapshotError
from graphann.index import IndexParams, construct, search

from conftest import random_records


# -- TEXMEX files -------------------------------------------------------------


def test_fvecs_single_record_round_trip(tmp_path):
    path = tmp_path / "one.fvecs"
    write_fvecs(path, np.array([[1.0, 2.0]], dtype=np.float32))
    out = load_fvecs(path)
    assert out.tolist() == [[1.0, 2.0]]
    # verify the exact byte layout: little-endian d, then d float32
    raw = path.read_bytes()
    assert raw[:4] == (2).to_bytes(4, "little")
    assert len(raw) == 4 + 2 * 4


def test_fvecs_empty_file(tmp_path):
    path = tmp_path / "empty.fvecs"
    path.write_bytes(b"")
    assert len(load_fvecs(path)) == 0


def test_fvecs_random_round_trip_bit_identical(tmp_path):
    rng = np.random.default_rng(3)
    mat = rng.normal(0, 1, (100, 17)).astype(np.float32)
    path = tmp_path / "r.fvecs"
    write_fvecs(path, mat)
    out = load_fvecs(path)
    assert out.dtype == np.float32
    assert np.array_equal(out, mat)


def test_bvecs_and_ivecs_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    b = rng.integers(0, 256, (40, 9)).astype(np.uint8)
    i = rng.integers(-1000, 1000, (40, 9)).astype(np.int32)
    write_bvecs(tmp_path / "x.bvecs", b)
    write_ivecs(tmp_path / "x.ivecs", i)
    assert np.array_equal(load_bvecs(tmp_path / "x.bvecs"), b)
    assert np.array_equal(load_ivecs(tmp_path / "x.ivecs"), i)


def test_fvecs_truncated_rejected(tmp_path):
    path = tmp_path / "t.fvecs"
    write_fvecs(path, np.ones((3, 4), dtype=np.float32))
    raw = path.read_bytes()
    path.write_bytes(raw[:-3])
    with pytest.raises(DatasetFormatError):
        load_fvecs(path)


def test_fvecs_inconsistent_dimension_rejected(tmp_path):
    path = tmp_path / "bad.fvecs"
    rec1 = (2).to_bytes(4, "little") + np.ones(2, dtype="<f4").tobytes()
    rec2 = (3).to_bytes(4, "little") + np.ones(3, dtype="<f4").tobytes()
    # pad so total length is a multiple of the first record size
    path.write_bytes(rec1 + rec2 + b"\x00" * (12 - len(rec2) % 12))
    with pytest.raises(DatasetFormatError):
        load_fvecs(path)


def test_bundle_from_files(tmp_path):
    rng = np.random.default_rng(5)
    base = rng.normal(0, 1, (30, 5)).astype(np.float32)
    queries = rng.normal(0, 1, (4, 5)).astype(np.float32)
    write_fvecs(tmp_path / "b.fvecs", base)
    write_fvecs(tmp_path / "q.fvecs", queries)
    bundle = bundle_from_files(tmp_path / "b.fvecs", tmp_path / "q.fvecs")
    assert [r.external_id for r in bundle.base] == list(range(1, 31))
    assert np.array_equal(bundle.queries, queries)
    write_fvecs(tmp_path / "q6.fvecs", rng.normal(0, 1, (4, 6)).astype(np.float32))
    with pytest.raises(DatasetFormatError):
        bundle_from_files(tmp_path / "b.fvecs", tmp_path / "q6.fvecs")


# -- glove conversion -----------------------------------------------------------


def test_convert_glove_round_trip(tmp_path):
    text = tmp_path / "glove.txt"
    text.write_text("the 0.1 0.2 0.3\ncat -1.5 0.25 4.0\n")
    out = tmp_path / "glove.fvecs"
    assert convert_glove(text, out) == 2
    mat = load_fvecs(out)
    assert mat.shape == (2, 3)
    assert mat[1].tolist() == pytest.approx([-1.5, 0.25, 4.0])


def test_convert_glove_ragged_rejected(tmp_path):
    text = tmp_path / "bad.txt"
    text.write_text("a 1.0 2.0\nb 1.0\n")
    with pytest.raises(DatasetFormatError):
        convert_glove(text, tmp_path / "bad.fvecs")


# -- synthetic -------------------------------------------------------------------


def test_synth_deterministic():
    a = synth_dataset(200, 8, n_clusters=3, seed=11, n_queries=20)
    b = synth_dataset(200, 8, n_clusters=3, seed=11, n_queries=20)
    assert np.array_equal(a.queries, b.queries)
    assert all(
        np.array_equal(x.vector, y.vector) and x.external_id == y.external_id
        for x, y in zip(a.base, b.base)
    )
    c = synth_dataset(200, 8, n_clusters=3, seed=12, n_queries=20)
    assert not np.array_equal(a.queries, c.queries)


def test_synth_single_tight_cluster():
    bundle = synth_dataset(300, 4, n_clusters=1, seed=7, n_queries=10, noise_scale=1e-3)
    mat = np.stack([r.vector for r in bundle.base])
    center = mat.mean(axis=0)
    for q in bundle.queries:
        assert np.linalg.norm(q - center) < 1.0  # queries sit inside the cluster


def test_synth_base_prefix_stable_in_query_count():
    a = synth_dataset(100, 4, seed=3, n_queries=5)
    b = synth_dataset(100, 4, seed=3, n_queries=50)
    assert np.array_equal(a.base[10].vector, b.base[10].vector)


def test_synth_fresh_index_recall_at_scale():
    # acceptance-parameter sanity: fresh index reaches oracle recall >= 0.95 at ef=160
    from graphann.harness import ground_truth_oracle

    bundle = synth_dataset(10**4, 32, n_clusters=8, seed=5, n_queries=100)
    index = construct(bundle.base, IndexParams(dimension=32, m=8, ef_construction=48, seed=5))
    truth = ground_truth_oracle(bundle.base, bundle.queries, k=10)
    hits = 0
    for q, g in zip(bundle.queries, truth.nearest):
        hits += g in search(index, q, 10, 160).ids
    assert hits / 100 >= 0.95


def test_synth_validation():
    with pytest.raises(ValueError):
        synth_dataset(0, 4)
    with pytest.raises(ValueError):
        synth_dataset(10, 0)


# -- snapshots --------------------------------------------------------------------


def test_snapshot_empty_index_round_trip(tmp_path):
    index = construct([], IndexParams(dimension=4, seed=1))
    save_index(index, set(), tmp_path / "e.idx")
    loaded, flags = load_index(tmp_path / "e.idx")
    assert loaded.live_count == 0 and flags == set()
    assert loaded.entry_point is None


def test_snapshot_behavioral_identity(tmp_path):
    records, pts = random_records(1000, 8, seed=8)
    index = construct(records, IndexParams(dimension=8, m=8, seed=8))
    flags = delete_logical(index, set(), set(range(1, 101)))
    delete_physical(index, set(range(101, 151)), flags)
    save_index(index, flags, tmp_path / "i.idx")
    loaded, loaded_flags = load_index(tmp_path / "i.idx")

    assert loaded_flags == flags
    assert loaded.live_ids() == index.live_ids()
    assert loaded.adjacency_snapshot() == index.adjacency_snapshot()
    assert loaded.entry_point == index.entry_point
    rng = np.random.default_rng(9)
    for q in rng.uniform(0, 1, (50, 8)).astype(np.float32):
        assert search(loaded, q, 10, 64) == search(index, q, 10, 64)


def test_snapshot_preserves_rng_stream(tmp_path):
    records, _ = random_records(50, 4, seed=10)
    index = construct(records, IndexParams(dimension=4, seed=10))
    save_index(index, set(), tmp_path / "s.idx")
    loaded, _ = load_index(tmp_path / "s.idx")
    from graphann.index import add

    extra, _ = random_records(20, 4, seed=11)
    batch = [(ext + 50, vec) for ext, vec in extra]
    add(index, list(batch))
    add(loaded, list(batch))
    assert index.adjacency_snapshot() == loaded.adjacency_snapshot()


def test_snapshot_truncation_detected(tmp_path):
    records, _ = random_records(100, 4, seed=12)
    index = construct(records, IndexParams(dimension=4, seed=12))
    path = tmp_path / "t.idx"
    save_index(index, set(), path)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(SnapshotError):
        load_index(path)


def test_snapshot_corruption_detected(tmp_path):
    records, _ = random_records(100, 4, seed=12)
    index = construct(records, IndexParams(dimension=4, seed=12))
    path = tmp_path / "c.idx"
    save_index(index, set(), path)
    raw = bytearray(path.read_bytes())
    raw[200] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(SnapshotError):
        load_index(path)


def test_snapshot_bad_magic_and_version(tmp_path):
    path = tmp_path / "m.idx"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(SnapshotError):
        load_index(path)
    records, _ = random_records(10, 4, seed=13)
    index = construct(records, IndexParams(dimension=4, seed=13))
    good = tmp_path / "v.idx"
    save_index(index, set(), good)
    raw = bytearray(good.read_bytes())
    raw[4] = 99
    good.write_bytes(bytes(raw))
    with pytest.raises(SnapshotError):
        load_index(good)
