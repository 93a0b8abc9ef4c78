"""Assembly of a runnable system plus the shared command-envelope semantics.

``build_system`` wires the plant, the scan runtime, one silo unit per
configured silo, the two common resources and the plant controller.  The
CLI's headless runner and the HTTP service both funnel external commands
through :func:`apply_envelope`, so a scenario file injected headlessly and
the same commands posted over HTTP take identical effect at identical cycle
boundaries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .components import SiloUnit, build_silo_unit
from .config import AppConfig
from .errors import ServiceError
from .orchestration import PIPE, POWER, CommonResource, PlantController
from .plant import Plant
from .runtime import CycleLogWriter, ScanContext, ScanRuntime

ACTUATOR_FIELDS = ("in_valve", "out_valve", "heater", "mixer")

ENVELOPE_KINDS = (
    "START_PROCESS",
    "ABORT_PROCESS",
    "MANUAL_ACTUATOR",
    "PAUSE",
    "RESUME",
    "STEP_N",
)


@dataclass
class System:
    config: AppConfig
    plant: Plant
    runtime: ScanRuntime
    units: dict[str, SiloUnit]
    pc: PlantController
    resources: dict[str, CommonResource]


def build_system(config: AppConfig, log_writer: CycleLogWriter | None = None) -> System:
    plant = config.plant
    runtime = ScanRuntime(plant, config.cycle, log_writer=log_writer)
    units: dict[str, SiloUnit] = {}
    for index, (sid, spec) in enumerate(plant.specs.items()):
        unit = build_silo_unit(spec, config.cycle.period_s)
        units[sid] = unit
        runtime.attach_sr(unit.sr)
        runtime.register(unit.controller, order_key=10 * (index + 1))
    resources = {PIPE: CommonResource(PIPE), POWER: CommonResource(POWER)}
    pc = PlantController(units, resources, config.recipes, config.cycle.period_s)
    runtime.register(pc, order_key=1000)
    runtime.add_state_provider(pc.state_provider)
    return System(
        config=config,
        plant=plant,
        runtime=runtime,
        units=units,
        pc=pc,
        resources=resources,
    )


def apply_envelope(system: System, kind: str, payload: Mapping, ctx: ScanContext) -> dict:
    """Apply one external command at a cycle boundary; returns the reply body.

    Raises SiloPlantError subclasses for every rejection; the reason code
    travels to the HTTP edge / scenario runner unchanged.
    """
    payload = dict(payload or {})
    if kind == "START_PROCESS":
        recipe = payload.get("recipe")
        if not isinstance(recipe, str):
            raise ServiceError("VALIDATION", "START_PROCESS needs a recipe name")
        overrides = payload.get("config") or {}
        if not isinstance(overrides, dict):
            raise ServiceError("VALIDATION", "START_PROCESS config must be an object")
        pid = system.pc.start_process(recipe, overrides)
        # The batch now owns its silos; stale manual overrides must not fight it.
        for silo in system.pc.processes[pid].plan.silos:
            for actuator in ACTUATOR_FIELDS:
                system.runtime.manual_overrides.pop((silo, actuator), None)
        ctx.record({"type": "process_accepted", "process": pid, "recipe": recipe})
        return {"process_id": pid, "effective_cycle": ctx.cycle}

    if kind == "ABORT_PROCESS":
        pid = payload.get("process_id")
        if not isinstance(pid, str):
            raise ServiceError("VALIDATION", "ABORT_PROCESS needs a process_id")
        system.pc.abort_process(pid)
        ctx.record({"type": "abort_accepted", "process": pid})
        return {"process_id": pid, "effective_cycle": ctx.cycle}

    if kind == "MANUAL_ACTUATOR":
        silo = payload.get("silo")
        actuator = payload.get("actuator")
        value = payload.get("value")
        if silo not in system.plant.specs:
            raise ServiceError("VALIDATION", f"unknown silo {silo!r}")
        if actuator not in ACTUATOR_FIELDS:
            raise ServiceError("VALIDATION", f"unknown actuator {actuator!r}")
        if not isinstance(value, bool):
            raise ServiceError("VALIDATION", "actuator value must be a boolean")
        spec = system.plant.specs[silo]
        if actuator == "heater" and not spec.has_heater:
            raise ServiceError("VALIDATION", f"silo {silo} has no heater")
        if actuator == "mixer" and not spec.has_mixer:
            raise ServiceError("VALIDATION", f"silo {silo} has no mixer")
        if silo in system.pc.claimed_silos():
            raise ServiceError("CONFLICT", f"silo {silo} is claimed by a live process")
        key = (silo, actuator)
        if value:
            system.runtime.manual_overrides[key] = True
        else:
            system.runtime.manual_overrides.pop(key, None)
        ctx.record(
            {"type": "manual_actuator", "silo": silo, "actuator": actuator, "value": value}
        )
        return {"silo": silo, "actuator": actuator, "value": value, "effective_cycle": ctx.cycle}

    if kind == "PAUSE":
        system.runtime.paused = True
        return {"paused": True, "effective_cycle": ctx.cycle}

    if kind == "RESUME":
        system.runtime.paused = False
        system.runtime.step_budget = 0
        return {"paused": False, "effective_cycle": ctx.cycle}

    if kind == "STEP_N":
        n = payload.get("n", 1)
        if not isinstance(n, int) or n < 1:
            raise ServiceError("VALIDATION", "STEP_N needs a positive integer n")
        system.runtime.paused = True
        system.runtime.step_budget += n
        return {"stepping": n, "effective_cycle": ctx.cycle}

    raise ServiceError("VALIDATION", f"unknown command kind {kind!r}")


# ----------------------------------------------------------------------
# Scenario files: reproducible command traces for headless runs.
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioItem:
    cycle: int
    kind: str
    payload: dict = field(default_factory=dict)


def load_scenario(source: str | Path | list) -> list[ScenarioItem]:
    """A scenario is a JSON list of {cycle, kind, payload} objects."""
    if isinstance(source, list):
        entries = source
    else:
        entries = json.loads(Path(source).read_text())
        if not isinstance(entries, list):
            raise ServiceError("VALIDATION", "scenario file must hold a JSON list")
    items = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ServiceError("VALIDATION", f"scenario entry {i} must be an object")
        cycle = entry.get("cycle")
        kind = entry.get("kind")
        if not isinstance(cycle, int) or cycle < 0:
            raise ServiceError("VALIDATION", f"scenario entry {i}: bad cycle {cycle!r}")
        if kind not in ENVELOPE_KINDS:
            raise ServiceError("VALIDATION", f"scenario entry {i}: unknown kind {kind!r}")
        items.append(ScenarioItem(cycle=cycle, kind=kind, payload=entry.get("payload") or {}))
    return sorted(items, key=lambda it: it.cycle)


def run_headless(
    system: System,
    cycles: int,
    scenario: list[ScenarioItem] | None = None,
    stop_when=None,
) -> list[dict]:
    """Run ``cycles`` scan cycles, injecting scenario items at their boundaries.

    Rejected scenario commands are recorded in the cycle's event list instead
    of stopping the run.  Returns the list of cycle reports.
    """
    reports: list[dict] = []
    system.runtime.add_listener(reports.append)
    pending = list(scenario or [])
    for _ in range(cycles):
        boundary = system.runtime.cycle_index
        while pending and pending[0].cycle <= boundary:
            item = pending.pop(0)
            system.runtime.submit(_make_boundary_fn(system, item))
        system.runtime.run_cycle()
        if stop_when is not None and stop_when(system):
            break
    return reports


def _make_boundary_fn(system: System, item: ScenarioItem):
    def fn(ctx: ScanContext):
        try:
            return apply_envelope(system, item.kind, item.payload, ctx)
        except Exception as exc:
            code = getattr(exc, "code", type(exc).__name__)
            ctx.record(
                {
                    "type": "command_rejected",
                    "kind": item.kind,
                    "reason": code,
                    "detail": str(exc),
                }
            )
            return {"rejected": code}

    return fn
