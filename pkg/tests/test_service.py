import json

import pytest
from fastapi.testclient import TestClient

from stampmon import pipeline, signals
from stampmon.service import create_app, threshold_sidecar_path


@pytest.fixture()
def client(small_model_path):
    sidecar = threshold_sidecar_path(small_model_path)
    if sidecar.exists():
        sidecar.unlink()
    app = create_app(small_model_path)
    with TestClient(app) as client:
        yield client


@pytest.fixture(scope="module")
def test_strokes(small_dataset, small_split_spec):
    split = signals.split_dataset(small_dataset, small_split_spec, mode="one_class")
    return list(split.test)


def _payload(stroke):
    return {
        "id": stroke.stroke_id,
        "samples": stroke.samples.tolist(),
        "rate": stroke.sample_rate_hz,
        "label": stroke.label,
    }


def test_post_stroke_matches_offline(client, small_model, test_strokes):
    stroke = test_strokes[0]
    resp = client.post("/strokes", json=_payload(stroke))
    assert resp.status_code == 200
    body = resp.json()
    offline, seg = pipeline.score_stroke(small_model, stroke)
    assert body["raw_distance"] == offline.raw_distance
    assert body["score"] == offline.score
    assert body["is_anomaly"] == offline.is_anomaly
    assert body["points"] == {k: v for k, v in seg.points.items()}


def test_malformed_payload_rejected(client):
    assert client.post("/strokes", json={"id": "x"}).status_code == 422
    assert client.post(
        "/strokes", json={"id": "x", "samples": [0.0, 1.0], "rate": -5.0}
    ).status_code == 422
    # wrong sample rate for the model
    assert client.post(
        "/strokes", json={"id": "x", "samples": [0.0] * 100, "rate": 50.0}
    ).status_code == 400
    # valid shape but no activity
    resp = client.post(
        "/strokes",
        json={"id": "flat", "samples": [0.0] * 50_000, "rate": 100_000.0},
    )
    assert resp.status_code == 422


def test_threshold_update_semantics(client, test_strokes):
    stroke = next(s for s in test_strokes if s.label == signals.NORMAL)
    base = client.post("/strokes", json=_payload(stroke)).json()
    score = base["score"]

    hi = min(1.0, score + 0.2)
    lo = max(0.0, score - 0.2) if score > 0 else 0.0
    assert client.put("/threshold", json={"value": hi}).json()["threshold"] == hi
    first = client.post("/strokes", json=_payload(stroke)).json()
    assert first["threshold_used"] == hi
    assert not first["is_anomaly"]

    client.put("/threshold", json={"value": lo})
    second = client.post("/strokes", json=_payload(stroke)).json()
    assert second["threshold_used"] == lo
    assert second["is_anomaly"] == (score > lo)


def test_threshold_out_of_range_rejected(client):
    before = client.get("/model").json()["threshold"]
    assert client.put("/threshold", json={"value": 1.5}).status_code == 422
    assert client.put("/threshold", json={"value": -0.1}).status_code == 422
    assert client.get("/model").json()["threshold"] == before


def test_model_info_snapshot(client, small_model):
    info = client.get("/model").json()
    assert info["feature_set_kind"] == "proposed"
    assert info["nu"] == small_model.svm.nu
    assert info["rho"] == small_model.svm.rho
    assert info["threshold"] == small_model.threshold
    assert info["calibration"] == list(small_model.svm.calibration)
    # idempotent
    assert client.get("/model").json() == info
    # reflects threshold updates
    client.put("/threshold", json={"value": 0.75})
    assert client.get("/model").json()["threshold"] == 0.75


def test_event_stream_order_and_threshold_events(client, test_strokes):
    with client.websocket_connect("/events") as ws:
        ids = []
        for stroke in test_strokes[:5]:
            client.post("/strokes", json=_payload(stroke))
            ids.append(stroke.stroke_id)
        client.put("/threshold", json={"value": 0.6})
        client.post("/strokes", json=_payload(test_strokes[5]))

        events = [ws.receive_json() for _ in range(7)]
    assert [e["stroke_id"] for e in events[:5]] == ids
    assert events[5]["type"] == "threshold"
    assert events[5]["threshold"] == 0.6
    assert events[6]["type"] == "score"
    assert events[6]["threshold_used"] == 0.6
    seqs = [e["seq"] for e in events]
    assert seqs == sorted(seqs)


def test_stroke_cache_and_eviction(small_model_path, test_strokes):
    app = create_app(small_model_path, stroke_cache=2)
    with TestClient(app) as client:
        for stroke in test_strokes[:3]:
            client.post("/strokes", json=_payload(stroke))
        gone = client.get(f"/strokes/{test_strokes[0].stroke_id}")
        assert gone.status_code == 404
        kept = client.get(f"/strokes/{test_strokes[2].stroke_id}")
        assert kept.status_code == 200
        body = kept.json()
        assert set(body["segmentation"]["points"]) == set("ABCDEF")
        assert len(body["filtered_samples"]) == len(test_strokes[2].samples)


def test_sidecar_persists_threshold_across_restart(small_model_path, test_strokes):
    sidecar = threshold_sidecar_path(small_model_path)
    if sidecar.exists():
        sidecar.unlink()
    app = create_app(small_model_path)
    with TestClient(app) as client:
        client.put("/threshold", json={"value": 0.31})
        first = client.post("/strokes", json=_payload(test_strokes[0])).json()
    assert json.loads(sidecar.read_text())["threshold"] == 0.31

    app2 = create_app(small_model_path)
    with TestClient(app2) as client:
        assert client.get("/model").json()["threshold"] == 0.31
        second = client.post("/strokes", json=_payload(test_strokes[0])).json()
    assert second["raw_distance"] == first["raw_distance"]
    assert second["score"] == first["score"]
    assert second["is_anomaly"] == first["is_anomaly"]
    sidecar.unlink()


def test_replay_endpoint_orders_events(small_model_path, small_dataset, tmp_path):
    subset = signals.StrokeDataset(
        strokes=tuple(list(small_dataset)[:6]), provenance={"kind": "test"}
    )
    data = tmp_path / "replay.csv"
    signals.write_dataset(subset, data)
    app = create_app(small_model_path)
    with TestClient(app) as client:
        with client.websocket_connect("/events") as ws:
            resp = client.post("/replay", json={"path": str(data), "rate": 100000.0})
            assert resp.status_code == 200
            assert resp.json()["replayed"] == 6
            events = [ws.receive_json() for _ in range(6)]
    assert [e["stroke_id"] for e in events] == [s.stroke_id for s in subset]
    assert all(e["label"] in ("normal", "anomaly") for e in events)
