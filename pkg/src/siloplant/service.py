"""HTTP/WebSocket edge over a running scan runtime.

The runtime loop runs on its own control thread.  Requests never touch that
thread directly: state reads are served from the snapshot published at each
WRITE, and every mutating request is queued and applied at the next cycle
boundary, with the outcome travelling back on a future.  Event-stream
subscribers get one JSON message per completed cycle; a subscriber that
stops reading is disconnected rather than ever back-pressuring the loop.
"""

from __future__ import annotations

import asyncio
import json
import queue
import threading
import time
from concurrent.futures import TimeoutError as FutureTimeout
from importlib import resources

from fastapi import FastAPI, Request, Response, WebSocket, WebSocketDisconnect

from .errors import ServiceError, SiloPlantError
from .system import System, apply_envelope

COMMAND_TIMEOUT_S = 10.0
SUBSCRIBER_QUEUE_SIZE = 256

STATUS_BY_CODE = {
    "VALIDATION": 422,
    "CONFLICT": 409,
    "SILOS_BUSY": 409,
    "ALREADY_DONE": 409,
    "BUSY": 409,
    "UNSUPPORTED": 422,
    "UNKNOWN_PROCESS": 404,
    "SERVICE_NOT_READY": 503,
}


class Subscriber:
    """One event-stream consumer; overflow marks it dead for disconnection."""

    def __init__(self):
        self.queue: "queue.Queue[str]" = queue.Queue(maxsize=SUBSCRIBER_QUEUE_SIZE)
        self.overflowed = False

    def offer(self, message: str) -> None:
        if self.overflowed:
            return
        try:
            self.queue.put_nowait(message)
        except queue.Full:
            self.overflowed = True


class SimulationService:
    """Owns the control thread and the fan-out of snapshots and events."""

    def __init__(self, system: System, model_document: dict | None = None):
        self.system = system
        self.model_document = model_document or default_model_document()
        self.latest_snapshot: dict | None = None
        self._subscribers: list[Subscriber] = []
        self._subscribers_lock = threading.Lock()
        self._thread: threading.Thread | None = None
        system.runtime.add_listener(self._on_cycle)

    # -- lifecycle -------------------------------------------------------

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(
            target=self.system.runtime.run, name="scan-runtime", daemon=True
        )
        self._thread.start()

    def stop(self) -> None:
        self.system.runtime.stop()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    # -- control-thread side ----------------------------------------------

    def _on_cycle(self, report: dict) -> None:
        snapshot = self._snapshot_from_report(report)
        message = json.dumps(
            {
                "cycle_index": report["cycle"],
                "state": snapshot,
                "events": report["events"],
                "faults": report["faults"],
                "overrun": report["overrun"],
            },
            sort_keys=True,
        )
        self.latest_snapshot = snapshot
        with self._subscribers_lock:
            subscribers = list(self._subscribers)
        for sub in subscribers:
            sub.offer(message)

    def _snapshot_from_report(self, report: dict) -> dict:
        return {
            "cycle_index": report["cycle"],
            "silos": report["silos"],
            "resources": report.get("resources", {}),
            "processes": report.get("processes", {}),
            "overrun_count": self.system.runtime.overrun_count,
        }

    # -- request side ------------------------------------------------------

    def get_state(self) -> dict:
        snapshot = self.latest_snapshot
        if snapshot is None:
            raise ServiceError("SERVICE_NOT_READY", "no cycle has completed yet")
        return snapshot

    def post_command(self, kind: str, payload: dict) -> dict:
        received_at = time.time()
        future = self.system.runtime.submit(
            lambda ctx: apply_envelope(self.system, kind, payload, ctx)
        )
        try:
            reply = future.result(timeout=COMMAND_TIMEOUT_S)
        except FutureTimeout:
            future.cancel()
            raise ServiceError("SERVICE_NOT_READY", "runtime did not reach a cycle boundary")
        # Edge metadata only; boundary replies and cycle logs stay wall-clock free.
        return {**reply, "received_at": received_at}

    def subscribe(self) -> Subscriber:
        sub = Subscriber()
        with self._subscribers_lock:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: Subscriber) -> None:
        with self._subscribers_lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)


def default_model_document() -> dict:
    text = resources.files("siloplant.data").joinpath("liqueur_model.json").read_text()
    return json.loads(text)


def _error_response(exc: SiloPlantError) -> Response:
    status = STATUS_BY_CODE.get(exc.code, 400)
    return Response(
        content=json.dumps({"error": exc.code, "detail": str(exc)}),
        status_code=status,
        media_type="application/json",
    )


def create_app(service: SimulationService, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="siloplant control service")
    system = service.system

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.exception_handler(SiloPlantError)
    async def _handle_plant_error(request: Request, exc: SiloPlantError):
        return _error_response(exc)

    @app.get("/api/state")
    async def get_state():
        return service.get_state()

    @app.get("/api/model")
    async def get_model():
        plant = system.plant
        return {
            "component_model": service.model_document,
            "plant": {
                "period_ms": system.config.cycle.period_ms,
                "silos": [
                    {
                        "id": spec.id,
                        "capacity": spec.capacity,
                        "has_heater": spec.has_heater,
                        "has_mixer": spec.has_mixer,
                        "has_temp_sensor": spec.has_temp_sensor,
                        "low_threshold": spec.low_threshold,
                        "high_threshold": spec.high_threshold,
                    }
                    for spec in plant.specs.values()
                ],
                "recipes": sorted(system.pc.recipes),
            },
        }

    @app.post("/api/process")
    async def start_process(request: Request):
        body = await request.json()
        if not isinstance(body, dict):
            raise ServiceError("VALIDATION", "body must be a JSON object")
        return service.post_command(
            "START_PROCESS", {"recipe": body.get("recipe"), "config": body.get("config")}
        )

    @app.delete("/api/process/{process_id}")
    async def abort_process(process_id: str):
        return service.post_command("ABORT_PROCESS", {"process_id": process_id})

    @app.post("/api/silo/{silo_id}/actuator")
    async def manual_actuator(silo_id: str, request: Request):
        body = await request.json()
        if not isinstance(body, dict):
            raise ServiceError("VALIDATION", "body must be a JSON object")
        return service.post_command(
            "MANUAL_ACTUATOR",
            {"silo": silo_id, "actuator": body.get("actuator"), "value": body.get("value")},
        )

    @app.post("/api/sim/pause")
    async def pause():
        return service.post_command("PAUSE", {})

    @app.post("/api/sim/resume")
    async def resume():
        return service.post_command("RESUME", {})

    @app.post("/api/sim/step")
    async def step(n: int = 1):
        return service.post_command("STEP_N", {"n": n})

    @app.websocket("/api/events")
    async def events(ws: WebSocket):
        await ws.accept()
        sub = service.subscribe()
        loop = asyncio.get_event_loop()
        try:
            while True:
                if sub.overflowed:
                    await ws.close(code=1013, reason="SUBSCRIBER_OVERFLOW")
                    break
                try:
                    message = await loop.run_in_executor(None, sub.queue.get, True, 0.5)
                except queue.Empty:
                    continue
                await ws.send_text(message)
        except WebSocketDisconnect:
            pass
        finally:
            service.unsubscribe(sub)

    return app
