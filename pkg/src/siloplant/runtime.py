"""Time-triggered scan-cycle executor.

Each cycle runs READ -> EXECUTE -> WRITE:

* READ: external commands queued since the last boundary are applied, then
  the sensor image is snapshotted into every attached SR.
* EXECUTE: registered components run once each, in ascending order key; calls
  between components are synchronous inside this phase.  A component that
  raises is contained as a COMPONENT_ERROR fault; the cycle always completes.
* WRITE: the SR output images (plus any manual overrides) merge into one
  actuator image and the plant advances by exactly one period of simulated
  time, regardless of wall-clock pacing.

``time_scale`` only changes wall pacing: 0 runs back-to-back (headless),
1 is real time, larger is faster than real time.  The timer policy is fixed
delay: an overrunning cycle delays its successors instead of skipping.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
import time
from concurrent.futures import Future
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Protocol

from .components import SiloSR
from .config import CycleSettings
from .errors import RegistrationError
from .plant import Fault, FaultCode, Plant, SiloActuators

log = logging.getLogger(__name__)

CycleConfig = CycleSettings

# Log fields that depend on the wall clock; replay comparisons strip these.
WALL_CLOCK_FIELDS = ("wall_start", "exec_ms")


@dataclass(frozen=True)
class CycleRecord:
    cycle_index: int
    wall_start: float
    exec_ms: float
    overrun: bool
    faults: tuple[Fault, ...]


@dataclass(frozen=True)
class Registration:
    name: str
    order_key: int


class Runnable(Protocol):
    name: str

    def execute(self, ctx: "ScanContext") -> None: ...


class ScanContext:
    """Per-cycle handle passed to components: the cycle index plus an event sink."""

    __slots__ = ("cycle", "_events")

    def __init__(self, cycle: int, events: list):
        self.cycle = cycle
        self._events = events

    def record(self, event: dict) -> None:
        self._events.append(event)


class CycleLogWriter:
    """Appends one JSON object per cycle; rotates the file by size."""

    def __init__(self, path: str | Path, rotate_bytes: int = 50 * 1024 * 1024):
        self.path = Path(path)
        self.rotate_bytes = rotate_bytes
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("a", encoding="utf-8")

    def write(self, report: dict) -> None:
        line = json.dumps(report, sort_keys=True, separators=(",", ":"))
        self._fh.write(line + "\n")
        self._fh.flush()
        if self._fh.tell() >= self.rotate_bytes:
            self._rotate()

    def _rotate(self) -> None:
        self._fh.close()
        rolled = self.path.with_name(self.path.name + ".1")
        if rolled.exists():
            rolled.unlink()
        self.path.rename(rolled)
        self._fh = self.path.open("a", encoding="utf-8")

    def close(self) -> None:
        self._fh.close()


class ScanRuntime:
    """Owns the plant state, the attached SRs and the execution schedule."""

    def __init__(self, plant: Plant, config: CycleConfig | None = None,
                 log_writer: CycleLogWriter | None = None):
        self.plant = plant
        self.config = config or CycleConfig()
        self.states = plant.initial_states()
        self.log_writer = log_writer
        self.cycle_index = 0                   # next cycle to execute
        self.overrun_count = 0
        self.last_sensor_image: dict | None = None
        self.last_record: CycleRecord | None = None
        self.manual_overrides: dict[tuple[str, str], bool] = {}
        self.paused = False
        self.step_budget = 0
        self._srs: dict[str, SiloSR] = {}
        self._components: list[tuple[int, Runnable]] = []
        self._order_keys: set[int] = set()
        self._started = False
        self._queue: "queue.Queue[tuple[Callable, Future]]" = queue.Queue()
        self._listeners: list[Callable[[dict], None]] = []
        self._state_providers: list[Callable[[], dict]] = []
        self._stop = threading.Event()

    # ------------------------------------------------------------------
    # Wiring (before start)
    # ------------------------------------------------------------------

    def attach_sr(self, sr: SiloSR) -> None:
        if sr.silo_id not in self.plant.specs:
            raise ValueError(f"SR for unknown silo {sr.silo_id}")
        self._srs[sr.silo_id] = sr

    def register(self, component: Runnable, order_key: int) -> Registration:
        if self._started:
            raise RegistrationError(
                "RUNTIME_ALREADY_STARTED", "cannot register components after the first cycle"
            )
        if order_key in self._order_keys:
            raise RegistrationError(
                "DUPLICATE_ORDER_KEY", f"order key {order_key} is already taken"
            )
        self._order_keys.add(order_key)
        self._components.append((order_key, component))
        self._components.sort(key=lambda item: item[0])
        return Registration(name=component.name, order_key=order_key)

    def add_listener(self, listener: Callable[[dict], None]) -> None:
        """Called with the cycle report after every completed cycle."""
        self._listeners.append(listener)

    def add_state_provider(self, provider: Callable[[], dict]) -> None:
        """Merged into every cycle report (e.g. process and resource state)."""
        self._state_providers.append(provider)

    # ------------------------------------------------------------------
    # Command injection
    # ------------------------------------------------------------------

    def submit(self, fn: Callable[[ScanContext], object]) -> Future:
        """Queue ``fn`` to run at the next cycle boundary (thread-safe)."""
        future: Future = Future()
        self._queue.put((fn, future))
        return future

    def _drain_queue(self, ctx: ScanContext) -> None:
        while True:
            try:
                fn, future = self._queue.get_nowait()
            except queue.Empty:
                return
            if not future.set_running_or_notify_cancel():
                continue
            try:
                future.set_result(fn(ctx))
            except BaseException as exc:  # rejection reasons travel on the future
                future.set_exception(exc)

    # ------------------------------------------------------------------
    # Execution
    # ------------------------------------------------------------------

    @property
    def wall_period_s(self) -> float | None:
        if self.config.time_scale <= 0:
            return None
        return self.config.period_s / self.config.time_scale

    def run_cycle(self) -> CycleRecord:
        self._started = True
        cycle = self.cycle_index
        wall_start = time.time()
        t0 = time.perf_counter()
        events: list[dict] = []
        ctx = ScanContext(cycle, events)

        # READ: apply queued commands at the boundary, then snapshot sensors.
        self._drain_queue(ctx)
        sensors = self.plant.read_sensors(self.states)
        self.last_sensor_image = sensors
        for sid, sr in self._srs.items():
            sr.set_input(sensors[sid])

        # EXECUTE: ascending order key; failures are contained per component.
        exec_faults: set[Fault] = set()
        for _, component in self._components:
            try:
                component.execute(ctx)
            except Exception as exc:
                log.exception("component %s failed in cycle %d", component.name, cycle)
                exec_faults.add(Fault(FaultCode.COMPONENT_ERROR.value, None))
                events.append(
                    {
                        "type": "component_error",
                        "component": component.name,
                        "error": f"{type(exc).__name__}: {exc}",
                    }
                )

        # WRITE: merge SR outputs and manual overrides, then step the plant.
        image: dict[str, SiloActuators] = {}
        for sid in self.plant.specs:
            sr = self._srs.get(sid)
            image[sid] = sr.output_image() if sr else SiloActuators()
        for (sid, actuator), value in self.manual_overrides.items():
            image[sid] = replace(image[sid], **{actuator: value})

        result = self.plant.step(self.states, image, dt=self.config.period_s)
        self.states = result.states
        faults = tuple(sorted(result.faults | exec_faults))
        if result.pipe_contention:
            events.append({"type": "pipe_contention"})

        exec_ms = (time.perf_counter() - t0) * 1000.0
        wall_period = self.wall_period_s
        overrun = wall_period is not None and exec_ms > wall_period * 1000.0
        if overrun:
            self.overrun_count += 1
        record = CycleRecord(
            cycle_index=cycle,
            wall_start=wall_start,
            exec_ms=exec_ms,
            overrun=overrun,
            faults=faults,
        )
        self.last_record = record
        self.cycle_index = cycle + 1

        report = self._build_report(record, sensors, image, events, result.transfer)
        if self.log_writer is not None:
            self.log_writer.write(report)
        for listener in self._listeners:
            listener(report)
        return record

    def _build_report(self, record, sensors, image, events, transfer) -> dict:
        silos = {}
        post_sensors = self.plant.read_sensors(self.states)
        for sid, spec in self.plant.specs.items():
            st = self.states[sid]
            act = image[sid]
            post = post_sensors[sid]
            silos[sid] = {
                "level": st.level,
                "temp": st.temp,
                "homogeneity": st.homogeneity,
                "sensors": {"empty": post.empty, "full": post.full, "temp": post.temp},
                "actuators": {
                    "in_valve": act.in_valve,
                    "out_valve": act.out_valve,
                    "heater": act.heater,
                    "mixer": act.mixer,
                },
            }
        report = {
            "cycle": record.cycle_index,
            "wall_start": record.wall_start,
            "exec_ms": record.exec_ms,
            "overrun": record.overrun,
            "faults": [f.label() for f in record.faults],
            "transfer": list(transfer) if transfer else None,
            "read_sensors": {
                sid: {"empty": s.empty, "full": s.full, "temp": s.temp}
                for sid, s in sensors.items()
            },
            "silos": silos,
            "events": events,
        }
        for provider in self._state_providers:
            report.update(provider())
        return report

    def run_until(self, predicate: Callable[["ScanRuntime"], bool], max_cycles: int):
        """Run until ``predicate`` holds; returns (cycles_used, satisfied)."""
        if max_cycles <= 0:
            raise ValueError("max_cycles must be positive")
        if predicate(self):
            return 0, True
        for used in range(1, max_cycles + 1):
            self.run_cycle()
            if predicate(self):
                return used, True
        return max_cycles, False

    # ------------------------------------------------------------------
    # Free-running loop (service mode)
    # ------------------------------------------------------------------

    def stop(self) -> None:
        self._stop.set()

    def run(self) -> None:
        """Loop run_cycle with wall pacing until stopped or max_cycles reached."""
        self._stop.clear()
        max_cycles = self.config.max_cycles
        while not self._stop.is_set():
            if max_cycles is not None and self.cycle_index >= max_cycles:
                break
            if self.paused and self.step_budget <= 0:
                # Sit at the cycle boundary but keep serving the command queue.
                try:
                    fn, future = self._queue.get(timeout=0.05)
                except queue.Empty:
                    continue
                ctx = ScanContext(self.cycle_index, [])
                if future.set_running_or_notify_cancel():
                    try:
                        future.set_result(fn(ctx))
                    except BaseException as exc:
                        future.set_exception(exc)
                continue
            loop_start = time.perf_counter()
            self.run_cycle()
            if self.step_budget > 0:
                self.step_budget -= 1
            wall_period = self.wall_period_s
            if wall_period is not None:
                remaining = wall_period - (time.perf_counter() - loop_start)
                if remaining > 0:
                    # Fixed-delay policy: a late cycle shifts its successors.
                    if self._stop.wait(remaining):
                        break
