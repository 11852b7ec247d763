"""HTTP/WebSocket surface for watching and nudging a live run.

Routes:
  GET  /state         latest published run state (world, mediation, trace)
  GET  /metrics       episode records so far plus run counters
  POST /intervention  submit a human strategy text; 409 when the run is
                      configured without interventions, 400 when malformed
  WS   /stream        pushes state documents, at most ten per second

The trainer publishes into :class:`StatePublisher` (rate-limited on the
producer side) and polls :class:`InterventionSink` for human input; the
sink holds at most one pending text, so a second submission while one is
waiting is answered with status "deferred" instead of queueing up stale
instructions.
"""
from __future__ import annotations

import asyncio
import threading
import time
from dataclasses import asdict
from typing import Any, Callable

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from starlette.websockets import WebSocket, WebSocketDisconnect


class StatePublisher:
    """Latest-value cell with a publish rate limit."""

    def __init__(self, min_interval: float = 0.1):
        self.min_interval = min_interval
        self._lock = threading.Lock()
        self._doc: dict | None = None
        self._seq = 0
        self._last_pub = 0.0

    def wants(self) -> bool:
        return time.monotonic() - self._last_pub >= self.min_interval

    def publish(self, doc: dict) -> None:
        with self._lock:
            self._doc = doc
            self._seq += 1
            self._last_pub = time.monotonic()

    def latest(self) -> tuple[int, dict | None]:
        with self._lock:
            return self._seq, self._doc


class InterventionSink:
    """Single-slot mailbox for human strategy text."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._pending: str | None = None
        self.accepted = 0
        self.deferred = 0

    def offer(self, text: str) -> str:
        with self._lock:
            if self._pending is not None:
                self.deferred += 1
                return "deferred"
            self._pending = text
            self.accepted += 1
            return "accepted"

    def poll(self) -> str | None:
        with self._lock:
            text, self._pending = self._pending, None
            return text


def make_app(publisher: StatePublisher, sink: InterventionSink,
             intervention_type: str,
             metrics_supplier: Callable[[], list] | None = None,
             stream_interval: float = 0.1) -> FastAPI:
    app = FastAPI(title="firecrew ops", docs_url=None, redoc_url=None)

    @app.get("/state")
    def get_state() -> JSONResponse:
        _, doc = publisher.latest()
        if doc is None:
            return JSONResponse({"available": False, "state": None})
        return JSONResponse({"available": True, "state": doc})

    @app.get("/metrics")
    def get_metrics() -> JSONResponse:
        records = metrics_supplier() if metrics_supplier is not None else []
        docs = [asdict(r) if not isinstance(r, dict) else r for r in records]
        total_tasks = docs[-1]["total_task_count"] if docs else 0
        return JSONResponse({
            "episodes": len(docs),
            "total_task_count": total_tasks,
            "records": docs[-100:],
            "interventions": {"accepted": sink.accepted,
                              "deferred": sink.deferred},
        })

    @app.post("/intervention")
    async def post_intervention(request: Request) -> Response:
        try:
            body = await request.json()
        except Exception:
            body = None
        return _handle_intervention(body)

    def _handle_intervention(body: Any) -> Response:
        if intervention_type == "none":
            return JSONResponse(
                {"error": "this run does not accept interventions"},
                status_code=409)
        if not isinstance(body, dict) or "text" not in body:
            return JSONResponse(
                {"error": 'body must be a JSON object with a "text" field'},
                status_code=400)
        text = body["text"]
        if not isinstance(text, str) or not text.strip():
            return JSONResponse(
                {"error": '"text" must be a non-empty string'},
                status_code=400)
        status = sink.offer(text.strip())
        return JSONResponse({"status": status})

    @app.websocket("/stream")
    async def stream(ws: WebSocket) -> None:
        await ws.accept()
        last_seq = -1
        try:
            while True:
                await asyncio.sleep(stream_interval)
                seq, doc = publisher.latest()
                if doc is not None and seq != last_seq:
                    await ws.send_json(doc)
                    last_seq = seq
        except WebSocketDisconnect:
            pass

    return app


def serve_run(trainer, host: str = "127.0.0.1", port: int = 8700,
              total_steps: int | None = None) -> None:
    """Run training on a worker thread and the ops server in this one."""
    import uvicorn

    publisher = StatePublisher()
    sink = InterventionSink()
    trainer.publisher = publisher
    trainer.human_strategy_source = sink.poll
    app = make_app(publisher, sink, trainer.cfg.intervention_type,
                   metrics_supplier=lambda: list(trainer.records))

    worker = threading.Thread(target=trainer.train,
                              kwargs={"total_steps": total_steps},
                              daemon=True, name="trainer")
    worker.start()
    uvicorn.run(app, host=host, port=port, log_level="warning")
