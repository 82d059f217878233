"""HTTP service: index lifecycle, search, deletion, snapshots, estimates."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from graphann.service.app import create_app


@pytest.fixture()
def client():
    return TestClient(create_app())


def make_records(n, d, seed=0):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 1, (n, d))
    return [{"id": i + 1, "vector": pts[i].tolist()} for i in range(n)]


def create(client, name="demo", n=60, d=4, **kw):
    body = {"name": name, "dimension": d, "seed": 1, "m": 8, "records": make_records(n, d)}
    body.update(kw)
    resp = client.post("/indexes", json=body)
    assert resp.status_code == 201, resp.text
    return resp.json()


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_create_list_get_drop(client):
    info = create(client)
    assert info["live_count"] == 60
    assert info["flagged_count"] == 0
    assert info["memory"]["vector_bytes"] == 60 * 4 * 4
    assert client.get("/indexes").json()["indexes"][0]["name"] == "demo"
    assert client.get("/indexes/demo").status_code == 200
    assert client.get("/indexes/nope").status_code == 404
    assert client.post("/indexes", json={"name": "demo", "dimension": 4}).status_code == 409
    assert client.delete("/indexes/demo").status_code == 204
    assert client.get("/indexes/demo").status_code == 404


def test_add_and_search(client):
    create(client, n=40)
    new = {"id": 100, "vector": [0.5, 0.5, 0.5, 0.5]}
    resp = client.post("/indexes/demo/vectors", json={"records": [new]})
    assert resp.status_code == 200
    assert resp.json()["live_count"] == 41
    found = client.post(
        "/indexes/demo/search", json={"vector": new["vector"], "k": 1, "ef": 16}
    ).json()
    assert found["ids"][0] == 100
    assert found["distances"][0] == 0.0
    # duplicate id is a conflict
    assert client.post("/indexes/demo/vectors", json={"records": [new]}).status_code == 409


def test_search_validation_errors(client):
    create(client, n=10)
    resp = client.post("/indexes/demo/search", json={"vector": [0.1] * 4, "k": 5, "ef": 2})
    assert resp.status_code == 400
    resp = client.post("/indexes/demo/search", json={"vector": [0.1] * 3, "k": 1, "ef": 4})
    assert resp.status_code == 400


def test_logical_delete_filters_search(client):
    create(client, n=30)
    target = client.post(
        "/indexes/demo/search", json={"vector": [0.2] * 4, "k": 1, "ef": 16}
    ).json()["ids"][0]
    info = client.post(
        "/indexes/demo/delete", json={"ids": [target], "method": "logical"}
    ).json()
    assert info["flagged_count"] == 1
    assert info["live_count"] == 30  # storage untouched
    found = client.post(
        "/indexes/demo/search", json={"vector": [0.2] * 4, "k": 5, "ef": 16}
    ).json()
    assert target not in found["ids"]
    raw = client.post(
        "/indexes/demo/search",
        json={"vector": [0.2] * 4, "k": 5, "ef": 16, "include_flagged": True},
    ).json()
    assert target in raw["ids"]


def test_physical_delete_and_unknown_id(client):
    create(client, n=30)
    info = client.post(
        "/indexes/demo/delete", json={"ids": [1, 2, 3], "method": "physical"}
    ).json()
    assert info["live_count"] == 27
    resp = client.post("/indexes/demo/delete", json={"ids": [999], "method": "physical"})
    assert resp.status_code == 404


def test_rebuild_delete_clears_flags(client):
    create(client, n=30)
    client.post("/indexes/demo/delete", json={"ids": [5, 6], "method": "logical"})
    info = client.post(
        "/indexes/demo/delete", json={"ids": [7, 8], "method": "rebuild"}
    ).json()
    assert info["flagged_count"] == 0
    assert info["live_count"] == 26  # rebuild drops the batch and the flagged ids
    found = client.post(
        "/indexes/demo/search", json={"vector": [0.2] * 4, "k": 26, "ef": 30}
    ).json()
    assert not ({5, 6, 7, 8} & set(found["ids"]))


def test_snapshot_round_trip(client, tmp_path):
    create(client, n=25)
    path = str(tmp_path / "svc.idx")
    assert client.post("/indexes/demo/snapshot", json={"path": path}).status_code == 200
    resp = client.post("/indexes/load", json={"path": path, "name": "copy"})
    assert resp.status_code == 201
    assert resp.json()["live_count"] == 25
    q = {"vector": [0.3] * 4, "k": 3, "ef": 8}
    a = client.post("/indexes/demo/search", json=q).json()
    b = client.post("/indexes/copy/search", json=q).json()
    assert a == b
    assert client.post("/indexes/load", json={"path": path, "name": "copy"}).status_code == 409
    assert client.post("/indexes/load", json={"path": str(tmp_path / "no.idx"), "name": "x"}).status_code == 400


def test_estimate_endpoints(client):
    resp = client.post(
        "/estimates/rebuild-period",
        json={"baseline_recall": 0.95, "final_recall": 0.80, "steps": 5, "target_recall": 0.86},
    )
    assert resp.status_code == 200
    assert resp.json()["rebuild_period"] == 3
    resp = client.post(
        "/estimates/policy",
        json={"target_recall": 0.84, "recall_floor": 0.816, "rebuild_period": 1},
    )
    assert resp.json() == {"kind": "logical_then_rebuild", "rebuild_period": 1}
    resp = client.post(
        "/estimates/policy",
        json={"target_recall": 0.5, "recall_floor": 0.816, "rebuild_period": 1},
    )
    assert resp.json()["kind"] == "physical_only"


def test_benchmark_endpoint(client):
    resp = client.post(
        "/benchmarks",
        json={"method": "logical", "n": 200, "batch": 40, "steps": 2, "dim": 8,
              "queries": 20, "k": 5, "ef_search": 16, "ef_construction": 32},
    )
    assert resp.status_code == 200, resp.text
    steps = resp.json()["steps"]
    assert [s["step"] for s in steps] == [0, 1, 2]
    assert steps[0]["qps_delete"] is None
    assert steps[1]["qps_delete"] > 0
    assert steps[2]["flag_bytes"] == 80 * 8
