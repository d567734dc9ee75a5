"""Streaming monitoring service.

HTTP surface:
  POST /strokes              {id, samples, rate, label?} -> Decision JSON
  PUT  /threshold            {value} -> acknowledged threshold
  GET  /model                model metadata snapshot
  GET  /strokes/{id}         cached filtered waveform + overlay (last N)
  GET  /events  (WebSocket)  ScoreEvent stream + threshold-change events
  POST /replay               {path, rate?} -> replay a dataset file

Strokes are scored in arrival order under one lock, so event publication
is serialized and each event carries the threshold in force when it was
scored. Threshold updates persist to a sidecar next to the model file.
"""
from __future__ import annotations

import asyncio
import json
import time
from collections import OrderedDict
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import BaseModel, Field

from . import baseline, pipeline, signals
from .segmentation import DegenerateStroke, NoActivityDetected


class StrokePayload(BaseModel):
    id: str
    samples: list[float] = Field(min_length=2)
    rate: float = Field(gt=0)
    label: str | None = None


class ThresholdPayload(BaseModel):
    value: float = Field(ge=0.0, le=1.0)


class ReplayPayload(BaseModel):
    path: str
    rate: float | None = Field(default=None, gt=0)


def threshold_sidecar_path(model_path: str | Path) -> Path:
    return Path(str(model_path) + ".threshold.json")


class MonitorService:
    """Shared state: model reference, subscriber queues, stroke cache."""

    def __init__(self, model_path: str | Path, stroke_cache: int = 100):
        self.model_path = Path(model_path)
        self.model = pipeline.load_model(model_path)
        sidecar = threshold_sidecar_path(model_path)
        if sidecar.exists():
            value = json.loads(sidecar.read_text())["threshold"]
            self.model = self.model.with_threshold(value)
        self.lock = asyncio.Lock()
        self.subscribers: set[asyncio.Queue] = set()
        self.cache: OrderedDict[str, dict] = OrderedDict()
        self.cache_size = stroke_cache
        self.seq = 0

    def _broadcast(self, event: dict) -> None:
        for q in self.subscribers:
            q.put_nowait(event)

    async def score_and_publish(self, payload: StrokePayload) -> dict:
        if payload.rate != self.model.filter_spec.sample_rate_hz:
            raise HTTPException(
                status_code=400,
                detail=f"sample rate {payload.rate} does not match the model's "
                f"{self.model.filter_spec.sample_rate_hz}",
            )
        label = payload.label if payload.label in (signals.NORMAL, signals.ANOMALY) else None
        stroke = signals.StrokeSignal(
            stroke_id=payload.id,
            samples=payload.samples,
            sample_rate_hz=payload.rate,
            label=label or signals.UNLABELED,
        )
        async with self.lock:
            try:
                z, seg, filtered = pipeline.preprocess_stroke(self.model, stroke)
                decision = baseline.classify(self.model.svm, z)
            except (NoActivityDetected, DegenerateStroke, ValueError) as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            self.seq += 1
            event = {
                "type": "score",
                "seq": self.seq,
                "stroke_id": stroke.stroke_id,
                "timestamp": time.time(),
                "score": decision.score,
                "raw_distance": decision.raw_distance,
                "is_anomaly": decision.is_anomaly,
                "threshold_used": decision.threshold_used,
                "points": dict(seg.points),
                "label": label,
            }
            self.cache[stroke.stroke_id] = {
                "stroke_id": stroke.stroke_id,
                "sample_rate_hz": stroke.sample_rate_hz,
                "filtered_samples": filtered.samples.tolist(),
                "segmentation": seg.to_json_dict(),
                "decision": {
                    "score": decision.score,
                    "raw_distance": decision.raw_distance,
                    "is_anomaly": decision.is_anomaly,
                    "threshold_used": decision.threshold_used,
                },
                "label": label,
            }
            while len(self.cache) > self.cache_size:
                self.cache.popitem(last=False)
            self._broadcast(event)
        return event

    async def set_threshold(self, value: float) -> float:
        async with self.lock:
            self.model = self.model.with_threshold(value)
            threshold_sidecar_path(self.model_path).write_text(
                json.dumps({"threshold": value})
            )
            self.seq += 1
            self._broadcast({
                "type": "threshold",
                "seq": self.seq,
                "threshold": value,
                "timestamp": time.time(),
            })
        return value

    def model_info(self) -> dict:
        model = self.model
        svm = model.svm
        return {
            "feature_set_kind": svm.feature_set_kind,
            "nu": svm.nu,
            "gamma": svm.kernel.gamma,
            "kernel": svm.kernel.kind,
            "rho": svm.rho,
            "calibration": list(svm.calibration) if svm.calibration else None,
            "threshold": svm.threshold,
            "n_support_vectors": len(svm.alphas),
            "filter": {
                "cutoff_hz": model.filter_spec.cutoff_hz,
                "order": model.filter_spec.order,
                "sample_rate_hz": model.filter_spec.sample_rate_hz,
                "mode": model.filter_mode,
            },
            "trained_at": model.info.get("trained_at"),
            "version": model.info.get("version"),
        }

    async def replay(self, path: str | Path, rate_per_min: float) -> dict:
        dataset = signals.load_dataset(path)
        period = 60.0 / rate_per_min
        start = time.monotonic()
        delivered = 0
        for i, stroke in enumerate(dataset):
            target = start + i * period
            delay = target - time.monotonic()
            if delay > 0:
                await asyncio.sleep(delay)
            payload = StrokePayload(
                id=stroke.stroke_id,
                samples=stroke.samples.tolist(),
                rate=stroke.sample_rate_hz,
                label=stroke.label,
            )
            await self.score_and_publish(payload)
            delivered += 1
        return {"replayed": delivered, "seconds": time.monotonic() - start}


def create_app(
    model_path: str | Path,
    replay_path: str | Path | None = None,
    replay_rate_per_min: float = 70.0,
    stroke_cache: int = 100,
) -> FastAPI:
    service = MonitorService(model_path, stroke_cache=stroke_cache)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        task = None
        if replay_path is not None:
            task = asyncio.create_task(service.replay(replay_path, replay_rate_per_min))
        yield
        if task is not None:
            task.cancel()

    app = FastAPI(title="stampmon", lifespan=lifespan)
    app.state.service = service

    @app.post("/strokes")
    async def post_stroke(payload: StrokePayload):
        event = await service.score_and_publish(payload)
        return {
            "stroke_id": event["stroke_id"],
            "score": event["score"],
            "raw_distance": event["raw_distance"],
            "is_anomaly": event["is_anomaly"],
            "threshold_used": event["threshold_used"],
            "points": event["points"],
        }

    @app.put("/threshold")
    async def put_threshold(payload: ThresholdPayload):
        value = await service.set_threshold(payload.value)
        return {"threshold": value}

    @app.get("/model")
    async def get_model():
        return service.model_info()

    @app.get("/strokes/{stroke_id}")
    async def get_stroke(stroke_id: str):
        entry = service.cache.get(stroke_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"stroke {stroke_id!r} not cached")
        return entry

    @app.post("/replay")
    async def post_replay(payload: ReplayPayload):
        rate = payload.rate or replay_rate_per_min
        try:
            return await service.replay(payload.path, rate)
        except FileNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.websocket("/events")
    async def events(ws: WebSocket):
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue()
        service.subscribers.add(queue)
        try:
            while True:
                event = await queue.get()
                await ws.send_json(event)
        except WebSocketDisconnect:
            pass
        finally:
            service.subscribers.discard(queue)

    return app
