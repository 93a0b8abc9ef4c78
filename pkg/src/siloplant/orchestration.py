"""Batch orchestration: common resources, recipe state machines, coordinator.

Two shared resources guard the plant-wide constraints: PIPE serializes
silo-to-silo transfers and POWER serializes mixing.  Grants are FIFO; a
release hands the resource to the queue head in the same cycle.

A process machine walks a recipe table one transition per trigger.  Recipe A
runs S1 -> S4 (fill, dwell, transfer, heat, mix, empty); recipe B runs
S2 -> S3 (fill, heat, transfer, mix, empty).  Shared behavior lives in the
generic engine; the recipes differ only in their transition tables and entry
actions.  The transfer phase ends on whichever of source-empty or
destination-full fires first; the other command is cancelled (silently) and
the pipe released in the same cycle.

The PlantController owns every process machine: it applies start/abort
intents at its execute slice, runs live machines in start order, and unwires
finished ones so their silo ports can be reused.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .components import (
    Callback,
    CallbackKind,
    Connector,
    Port,
    SiloUnit,
    connect,
    process_facing_port,
)
from .config import RecipeSettings
from .errors import ProcessError, ResourceError

PIPE = "PIPE"
POWER = "POWER"


class Grant(str, enum.Enum):
    GRANTED = "GRANTED"
    QUEUED = "QUEUED"


class CommonResource:
    """Exclusive resource with FIFO hand-off."""

    def __init__(self, name: str):
        self.name = name
        self.holder: str | None = None
        self.wait_queue: deque[str] = deque()

    def acquire(self, client: str, ctx=None) -> Grant:
        if client == self.holder or client in self.wait_queue:
            raise ResourceError(
                "DUPLICATE_REQUEST", f"{client} already holds or waits for {self.name}"
            )
        self._record(ctx, {"type": "resource_request", "resource": self.name, "client": client})
        if self.holder is None:
            self.holder = client
            self._record(ctx, {"type": "resource_grant", "resource": self.name, "client": client})
            return Grant.GRANTED
        self.wait_queue.append(client)
        return Grant.QUEUED

    def release(self, client: str, ctx=None) -> str | None:
        if self.holder != client:
            raise ResourceError("NOT_HOLDER", f"{client} does not hold {self.name}")
        self._record(ctx, {"type": "resource_release", "resource": self.name, "client": client})
        if self.wait_queue:
            self.holder = self.wait_queue.popleft()
            self._record(
                ctx, {"type": "resource_grant", "resource": self.name, "client": self.holder}
            )
        else:
            self.holder = None
        return self.holder

    def withdraw(self, client: str) -> None:
        """Remove a queued (non-holding) waiter; no-op if absent."""
        try:
            self.wait_queue.remove(client)
        except ValueError:
            pass

    def state(self) -> dict:
        return {"holder": self.holder, "queue": list(self.wait_queue)}

    @staticmethod
    def _record(ctx, event: dict) -> None:
        if ctx is not None:
            ctx.record(event)


class ProcessState(str, enum.Enum):
    IDLE = "IDLE"
    FILLING_S1 = "FILLING_S1"
    DWELLING_S1 = "DWELLING_S1"
    FILLING_S2 = "FILLING_S2"
    HEATING_S2 = "HEATING_S2"
    WAIT_PIPE = "WAIT_PIPE"
    TRANSFERRING = "TRANSFERRING"
    HEATING_S4 = "HEATING_S4"
    WAIT_POWER = "WAIT_POWER"
    MIXING_S4 = "MIXING_S4"
    MIXING_S3 = "MIXING_S3"
    EMPTYING_S4 = "EMPTYING_S4"
    EMPTYING_S3 = "EMPTYING_S3"
    DONE = "DONE"
    ABORTED = "ABORTED"


# Trigger kinds; callback triggers carry the silo they came from.
START = "START"
DWELL_ELAPSED = "DWELL_ELAPSED"
PIPE_GRANTED = "PIPE_GRANTED"
POWER_GRANTED = "POWER_GRANTED"
ABORT = "ABORT"

Event = tuple[str, str | None]


@dataclass(frozen=True)
class RecipePlan:
    """One recipe: silo roles, transition table and per-state entry actions."""

    recipe: str
    source: str
    dest: str
    transitions: Mapping[tuple[ProcessState, Event], ProcessState]
    entry_actions: Mapping[ProcessState, tuple[str, ...]]

    @property
    def silos(self) -> tuple[str, str]:
        return (self.source, self.dest)

    def live_states(self) -> set[ProcessState]:
        states = {s for s, _ in self.transitions}
        states.update(self.transitions.values())
        states -= {ProcessState.DONE, ProcessState.ABORTED}
        return states


def _plan_a(source: str = "S1", dest: str = "S4") -> RecipePlan:
    S = ProcessState
    t = {
        (S.IDLE, (START, None)): S.FILLING_S1,
        (S.FILLING_S1, (CallbackKind.FILLING_COMPLETED.value, source)): S.DWELLING_S1,
        (S.DWELLING_S1, (DWELL_ELAPSED, None)): S.WAIT_PIPE,
        (S.WAIT_PIPE, (PIPE_GRANTED, None)): S.TRANSFERRING,
        (S.TRANSFERRING, (CallbackKind.POURING_COMPLETED.value, source)): S.HEATING_S4,
        (S.TRANSFERRING, (CallbackKind.FILLING_COMPLETED.value, dest)): S.HEATING_S4,
        (S.HEATING_S4, (CallbackKind.HEATING_COMPLETED.value, dest)): S.WAIT_POWER,
        (S.WAIT_POWER, (POWER_GRANTED, None)): S.MIXING_S4,
        (S.MIXING_S4, (CallbackKind.MIXING_COMPLETED.value, dest)): S.EMPTYING_S4,
        (S.EMPTYING_S4, (CallbackKind.POURING_COMPLETED.value, dest)): S.DONE,
    }
    actions = {
        S.FILLING_S1: ("fill_source",),
        S.DWELLING_S1: ("start_dwell",),
        S.WAIT_PIPE: ("acquire_pipe",),
        S.TRANSFERRING: ("fill_dest", "empty_source"),
        S.HEATING_S4: ("finish_transfer", "heat_dest"),
        S.WAIT_POWER: ("acquire_power",),
        S.MIXING_S4: ("mix_dest",),
        S.EMPTYING_S4: ("release_power", "empty_dest"),
        S.DONE: (),
    }
    return RecipePlan("A", source, dest, t, actions)


def _plan_b(source: str = "S2", dest: str = "S3") -> RecipePlan:
    S = ProcessState
    t = {
        (S.IDLE, (START, None)): S.FILLING_S2,
        (S.FILLING_S2, (CallbackKind.FILLING_COMPLETED.value, source)): S.HEATING_S2,
        (S.HEATING_S2, (CallbackKind.HEATING_COMPLETED.value, source)): S.WAIT_PIPE,
        (S.WAIT_PIPE, (PIPE_GRANTED, None)): S.TRANSFERRING,
        (S.TRANSFERRING, (CallbackKind.POURING_COMPLETED.value, source)): S.WAIT_POWER,
        (S.TRANSFERRING, (CallbackKind.FILLING_COMPLETED.value, dest)): S.WAIT_POWER,
        (S.WAIT_POWER, (POWER_GRANTED, None)): S.MIXING_S3,
        (S.MIXING_S3, (CallbackKind.MIXING_COMPLETED.value, dest)): S.EMPTYING_S3,
        (S.EMPTYING_S3, (CallbackKind.POURING_COMPLETED.value, dest)): S.DONE,
    }
    actions = {
        S.FILLING_S2: ("fill_source",),
        S.HEATING_S2: ("heat_source",),
        S.WAIT_PIPE: ("acquire_pipe",),
        S.TRANSFERRING: ("fill_dest", "empty_source"),
        S.WAIT_POWER: ("finish_transfer", "acquire_power"),
        S.MIXING_S3: ("mix_dest",),
        S.EMPTYING_S3: ("release_power", "empty_dest"),
        S.DONE: (),
    }
    return RecipePlan("B", source, dest, t, actions)


RECIPE_PLANS: dict[str, Callable[[], RecipePlan]] = {"A": _plan_a, "B": _plan_b}


class ProcessMachine:
    """Generic batch engine driven by a RecipePlan."""

    def __init__(
        self,
        process_id: str,
        plan: RecipePlan,
        settings: RecipeSettings,
        units: Mapping[str, SiloUnit],
        resources: Mapping[str, CommonResource],
        period_s: float,
    ):
        self.process_id = process_id
        self.plan = plan
        self.settings = settings
        self.resources = resources
        self.period_s = period_s
        self.state = ProcessState.IDLE
        self.held_resources: set[str] = set()
        self.warnings: list[str] = []
        self.done_cycle: int | None = None
        self._pending: deque[Event] = deque([(START, None)])
        self._dwell_until: int | None = None
        self.ports: dict[str, Port] = {
            silo: process_facing_port(
                owner=f"process_{process_id}",
                name=f"port_{silo}",
                spec=units[silo].spec,
                on_callback=self._on_callback,
            )
            for silo in plan.silos
        }

    # -- port plumbing --------------------------------------------------

    def _on_callback(self, callback: Callback) -> None:
        self._pending.append((callback.kind.value, callback.silo_id))

    # -- scan slice ------------------------------------------------------

    def execute(self, ctx) -> None:
        if self.state in (ProcessState.DONE, ProcessState.ABORTED):
            return
        if self.state is ProcessState.DWELLING_S1 and self._dwell_until is not None:
            if ctx.cycle >= self._dwell_until:
                self._dwell_until = None
                self._pending.append((DWELL_ELAPSED, None))
        if self.state is ProcessState.WAIT_PIPE and self.resources[PIPE].holder == self.process_id:
            self._pending.append((PIPE_GRANTED, None))
        if self.state is ProcessState.WAIT_POWER and self.resources[POWER].holder == self.process_id:
            self._pending.append((POWER_GRANTED, None))
        while self._pending:
            self._dispatch(self._pending.popleft(), ctx)

    def handle_event(self, event: Event, ctx) -> ProcessState | None:
        """Feed one trigger directly; returns the new state or None if ignored.

        Used by the transition-soundness checks; the scan path goes through
        :meth:`execute`.
        """
        before = self.state
        self._dispatch(event, ctx)
        return self.state if self.state is not before else None

    def abort(self, ctx) -> None:
        """Cancel silo commands, release held resources, park in ABORTED."""
        if self.state in (ProcessState.DONE, ProcessState.ABORTED):
            return
        for port in self.ports.values():
            if port.bound:
                port.call("cancel")
        for res in self.resources.values():
            if res.holder == self.process_id:
                res.release(self.process_id, ctx)
            else:
                res.withdraw(self.process_id)
        self.held_resources.clear()
        self._transition(ProcessState.ABORTED, (ABORT, None), ctx)
        self._pending.clear()

    # -- internals --------------------------------------------------------

    def _dispatch(self, event: Event, ctx) -> None:
        nxt = self.plan.transitions.get((self.state, event))
        if nxt is None:
            return
        self._transition(nxt, event, ctx)
        for action in self.plan.entry_actions.get(nxt, ()):
            getattr(self, f"_act_{action}")(event, ctx)

    def _transition(self, nxt: ProcessState, event: Event, ctx) -> None:
        ctx.record(
            {
                "type": "transition",
                "process": self.process_id,
                "recipe": self.plan.recipe,
                "from": self.state.value,
                "to": nxt.value,
                "trigger": event[0] if event[1] is None else f"{event[0]}@{event[1]}",
            }
        )
        self.state = nxt
        if nxt is ProcessState.DONE:
            self.done_cycle = ctx.cycle

    def _port(self, silo: str) -> Port:
        return self.ports[silo]

    # Entry actions.  Names are referenced from the recipe tables.

    def _act_fill_source(self, event, ctx) -> None:
        self._port(self.plan.source).call("fill")

    def _act_fill_dest(self, event, ctx) -> None:
        self._port(self.plan.dest).call("fill")

    def _act_empty_source(self, event, ctx) -> None:
        self._port(self.plan.source).call("empty")

    def _act_empty_dest(self, event, ctx) -> None:
        self._port(self.plan.dest).call("empty")

    def _act_heat_source(self, event, ctx) -> None:
        self._port(self.plan.source).call("heat_to_temp", self.settings.setpoint)

    def _act_heat_dest(self, event, ctx) -> None:
        self._port(self.plan.dest).call("heat_to_temp", self.settings.setpoint)

    def _act_mix_dest(self, event, ctx) -> None:
        self._port(self.plan.dest).call("mix", self.settings.mix_duration)

    def _act_start_dwell(self, event, ctx) -> None:
        cycles = int(-(-self.settings.dwell_s1 // self.period_s)) if self.settings.dwell_s1 > 0 else 0
        if cycles <= 0:
            self._pending.append((DWELL_ELAPSED, None))
        else:
            self._dwell_until = ctx.cycle + cycles

    def _act_acquire_pipe(self, event, ctx) -> None:
        if self.resources[PIPE].acquire(self.process_id, ctx) is Grant.GRANTED:
            self.held_resources.add(PIPE)
            self._pending.append((PIPE_GRANTED, None))

    def _act_acquire_power(self, event, ctx) -> None:
        if self.resources[POWER].acquire(self.process_id, ctx) is Grant.GRANTED:
            self.held_resources.add(POWER)
            self._pending.append((POWER_GRANTED, None))

    def _act_release_power(self, event, ctx) -> None:
        self.resources[POWER].release(self.process_id, ctx)
        self.held_resources.discard(POWER)

    def _act_finish_transfer(self, event, ctx) -> None:
        """Cancel the unfinished half of the transfer and give the pipe back."""
        kind, silo = event
        other = self.plan.dest if silo == self.plan.source else self.plan.source
        was_active = self._port(other).call("cancel")
        if was_active and other == self.plan.source:
            # Destination filled up first; whatever stayed behind is lost to
            # this batch but does not fail it.
            message = f"transfer ended with liquid left in {other}"
            self.warnings.append(message)
            ctx.record({"type": "process_warning", "process": self.process_id, "message": message})
        self.resources[PIPE].release(self.process_id, ctx)
        self.held_resources.discard(PIPE)

    def _act_mark_done(self, event, ctx) -> None:  # kept for table symmetry
        pass

    def snapshot(self) -> dict:
        return {
            "recipe": self.plan.recipe,
            "state": self.state.value,
            "held_resources": sorted(self.held_resources),
            "silos": list(self.plan.silos),
            "warnings": list(self.warnings),
            "done_cycle": self.done_cycle,
        }


class PlantController:
    """Registry and scheduler of process machines.

    Registered once with the scan runtime, after the silo controllers; each
    slice it applies pending aborts, executes live machines in start order
    and unwires machines that finished.
    """

    name = "plant_controller"

    def __init__(
        self,
        units: Mapping[str, SiloUnit],
        resources: Mapping[str, CommonResource],
        recipes: Mapping[str, RecipeSettings],
        period_s: float,
    ):
        self.units = dict(units)
        self.resources = dict(resources)
        self.recipes = dict(recipes)
        self.period_s = period_s
        self.processes: dict[str, ProcessMachine] = {}
        self._connectors: dict[str, list[Connector]] = {}
        self._pending_aborts: list[str] = []
        self._counter = 0

    # -- intents (applied at cycle boundaries through the runtime queue) --

    def live_processes(self) -> dict[str, ProcessMachine]:
        return {
            pid: machine
            for pid, machine in self.processes.items()
            if machine.state not in (ProcessState.DONE, ProcessState.ABORTED)
        }

    def claimed_silos(self) -> set[str]:
        claimed: set[str] = set()
        for machine in self.live_processes().values():
            claimed.update(machine.plan.silos)
        return claimed

    def start_process(self, recipe: str, overrides: Mapping[str, float] | None = None) -> str:
        if recipe not in RECIPE_PLANS:
            raise ProcessError("VALIDATION", f"unknown recipe {recipe!r}")
        plan = RECIPE_PLANS[recipe]()
        claimed = self.claimed_silos() & set(plan.silos)
        if claimed:
            raise ProcessError(
                "SILOS_BUSY", f"silos {sorted(claimed)} are claimed by a live process"
            )
        base = self.recipes.get(recipe, RecipeSettings(setpoint=60.0, mix_duration=30.0))
        settings = base
        if overrides:
            allowed = {"setpoint", "mix_duration", "dwell_s1"}
            unknown = set(overrides) - allowed
            if unknown:
                raise ProcessError("VALIDATION", f"unknown recipe overrides {sorted(unknown)}")
            settings = RecipeSettings(
                setpoint=overrides.get("setpoint", base.setpoint),
                mix_duration=overrides.get("mix_duration", base.mix_duration),
                dwell_s1=overrides.get("dwell_s1", base.dwell_s1),
            )
        self._counter += 1
        pid = f"p{self._counter}"
        machine = ProcessMachine(
            pid, plan, settings, self.units, self.resources, self.period_s
        )
        connectors = [
            connect(machine.ports[silo], self.units[silo].process_port)
            for silo in plan.silos
        ]
        self.processes[pid] = machine
        self._connectors[pid] = connectors
        return pid

    def abort_process(self, process_id: str) -> str:
        machine = self.processes.get(process_id)
        if machine is None:
            raise ProcessError("UNKNOWN_PROCESS", f"no process {process_id!r}")
        if machine.state in (ProcessState.DONE, ProcessState.ABORTED):
            raise ProcessError("ALREADY_DONE", f"process {process_id} already finished")
        if process_id not in self._pending_aborts:
            self._pending_aborts.append(process_id)
        return process_id

    # -- scan slice --------------------------------------------------------

    def execute(self, ctx) -> None:
        for pid in self._pending_aborts:
            machine = self.processes.get(pid)
            if machine is not None:
                machine.abort(ctx)
                self._unwire(pid)
        self._pending_aborts.clear()
        for pid, machine in list(self.processes.items()):
            if machine.state in (ProcessState.DONE, ProcessState.ABORTED):
                continue
            machine.execute(ctx)
            if machine.state in (ProcessState.DONE, ProcessState.ABORTED):
                self._unwire(pid)

    def _unwire(self, pid: str) -> None:
        for connector in self._connectors.pop(pid, []):
            connector.disconnect()

    def state_provider(self) -> dict:
        return {
            "processes": {pid: m.snapshot() for pid, m in self.processes.items()},
            "resources": {name: res.state() for name, res in self.resources.items()},
        }
