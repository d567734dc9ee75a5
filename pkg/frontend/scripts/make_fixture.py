"""Record a labeled replay through the monitoring service's HTTP/WS
surface into a JSON fixture for the dashboard tests.

The fixture carries the raw event stream plus the confusion counts the
evaluation module computes for the same strokes, so the dashboard tests
can verify the on-screen tallies against the backend's own arithmetic.
"""
import json
from pathlib import Path

from fastapi.testclient import TestClient

from stampmon import dsp, evaluation, pipeline, signals
from stampmon.service import create_app

HERE = Path(__file__).resolve().parent
FIXTURE = HERE.parent / "tests" / "fixtures" / "replay_events.json"


def main() -> None:
    params = signals.GeneratorParams()
    dataset = signals.synthesize_dataset(params, 120, 8, seed=3)
    split_spec = signals.SplitSpec(train_fraction=0.6, test_fraction=0.2, seed=3)
    model, _ = pipeline.train_monitor(
        dataset, dsp.FilterSpec(1800.0, 3, 100_000.0), split_spec=split_spec, seed=3
    )
    workdir = HERE.parent / "tests" / "fixtures"
    workdir.mkdir(parents=True, exist_ok=True)
    model_path = workdir / "_model.json"
    pipeline.save_model(model, model_path)

    split = signals.split_dataset(dataset, split_spec, mode="one_class")
    replay_path = workdir / "_replay.csv"
    signals.write_dataset(split.test, replay_path)

    app = create_app(model_path)
    with TestClient(app) as client:
        with client.websocket_connect("/events") as ws:
            resp = client.post("/replay", json={"path": str(replay_path), "rate": 1e9})
            n = resp.json()["replayed"]
            events = [ws.receive_json() for _ in range(n)]
        detail = client.get(f"/strokes/{events[-1]['stroke_id']}").json()

    labels = [1 if e["label"] == "anomaly" else 0 for e in events]
    preds = [1 if e["is_anomaly"] else 0 for e in events]
    counts = evaluation.confusion(preds, labels)
    FIXTURE.write_text(json.dumps({
        "events": events,
        "expected_counts": {"tp": counts.tp, "tn": counts.tn,
                            "fp": counts.fp, "fn": counts.fn},
        "stroke_detail": detail,
    }, indent=1))
    model_path.unlink()
    replay_path.unlink()
    print(f"wrote {len(events)} events to {FIXTURE}")
    print(f"counts: {counts.formatted()}")


if __name__ == "__main__":
    main()
