"""Discrete-time physics of the silo plant.

The plant is a row of silos, each with an input valve, an output valve and
optionally a heater, a mixer and a temperature sensor.  Liquid moves through
three channels:

* a raw-supply manifold that can feed any number of open input valves,
* a product-drain manifold that can take any number of open output valves,
* a single transfer pipe that engages only when exactly one output valve and
  one input valve are open across the whole plant.

Routing per step, from the actuator image alone:

* no output valve open        -> every open input valve fills from raw supply
* no input valve open         -> every open output valve drains to product
* exactly one of each         -> point-to-point transfer through the pipe
* any other mixed pattern     -> the pipe disengages; input valves fall back
  to raw supply and output valves to the product drain (recorded as a
  ``pipe_contention`` note in the step result, not a fault)
* two or more of BOTH         -> jammed pipe: PIPE_MULTI_SOURCE and
  PIPE_MULTI_DEST faults and no flow at all

Within one step the effects apply in a fixed order: flows (with mass-weighted
temperature mixing and homogeneity reset on any inflow), the overflow check,
heating, cooling, mixing.  ``step`` is a pure function of its arguments, so
two identical calls produce bit-identical results.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import ConfigError


class FaultCode(str, enum.Enum):
    PIPE_MULTI_SOURCE = "PIPE_MULTI_SOURCE"
    PIPE_MULTI_DEST = "PIPE_MULTI_DEST"
    DRY_HEATING = "DRY_HEATING"
    OVERFLOW_RISK = "OVERFLOW_RISK"
    ILLEGAL_ACTUATOR = "ILLEGAL_ACTUATOR"
    COMPONENT_ERROR = "COMPONENT_ERROR"


@dataclass(frozen=True, order=True)
class Fault:
    """One per-step fault fact; ``silo_id`` is None for plant-wide faults."""

    code: str
    silo_id: str | None = None

    def label(self) -> str:
        return self.code if self.silo_id is None else f"{self.code}:{self.silo_id}"


@dataclass(frozen=True)
class SiloSpec:
    """Static configuration of one silo."""

    id: str
    capacity: float = 100.0
    has_heater: bool = False
    has_mixer: bool = False
    has_temp_sensor: bool = False
    low_threshold: float = 2.0
    high_threshold: float = 95.0
    fill_rate: float = 4.0            # litres/second through the input valve
    drain_rate: float = 5.0           # litres/second through the output valve
    heat_rate: float = 2.0            # degrees C/second while the heater is on
    ambient_temp: float = 20.0
    cooling_time_constant: float = 600.0  # seconds

    def __post_init__(self):
        if not self.id:
            raise ConfigError("silo id must be non-empty")
        if not (0 < self.low_threshold < self.high_threshold < self.capacity):
            raise ConfigError(
                f"silo {self.id}: thresholds must satisfy "
                "0 < low_threshold < high_threshold < capacity"
            )
        for name in ("fill_rate", "drain_rate", "heat_rate", "cooling_time_constant"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"silo {self.id}: {name} must be strictly positive")
        if self.has_temp_sensor and not self.has_heater:
            raise ConfigError(
                f"silo {self.id}: a temperature sensor requires a heater"
            )

    @property
    def kind(self) -> str:
        if self.has_heater and self.has_mixer:
            return "heating_mixing_silo"
        if self.has_heater:
            return "heating_silo"
        if self.has_mixer:
            return "mixing_silo"
        return "silo"


@dataclass(frozen=True)
class SiloState:
    """Continuous physical state of one silo."""

    level: float = 0.0         # litres
    temp: float = 20.0         # degrees C
    homogeneity: float = 0.0   # dimensionless, 0 = unmixed, 1 = fully mixed


@dataclass(frozen=True)
class SiloActuators:
    """Per-silo slice of the actuator image written each cycle."""

    in_valve: bool = False
    out_valve: bool = False
    heater: bool = False
    mixer: bool = False


@dataclass(frozen=True)
class SiloSensors:
    """Per-silo slice of the sensor image; temp is None without a sensor."""

    empty: bool
    full: bool
    temp: float | None = None


CLOSED = SiloActuators()

ActuatorImage = Mapping[str, SiloActuators]
SensorImage = Mapping[str, SiloSensors]


@dataclass(frozen=True)
class StepResult:
    states: dict[str, SiloState]
    faults: frozenset[Fault]
    transfer: tuple[str, str] | None = None   # (source, dest) when the pipe carried flow
    pipe_contention: bool = False


class Plant:
    """The whole plant: silo specs plus the global supply/drain parameters."""

    def __init__(
        self,
        specs: Sequence[SiloSpec],
        supply_temp: float = 20.0,
        dry_level: float = 1.0,
        mix_time_constant: float = 30.0,
    ):
        if not specs:
            raise ConfigError("plant needs at least one silo")
        ids = [s.id for s in specs]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate silo ids in plant configuration")
        if mix_time_constant <= 0:
            raise ConfigError("mix_time_constant must be strictly positive")
        if dry_level < 0:
            raise ConfigError("dry_level must be non-negative")
        self.specs: dict[str, SiloSpec] = {s.id: s for s in specs}
        self.supply_temp = supply_temp
        self.dry_level = dry_level
        self.mix_time_constant = mix_time_constant

    @property
    def silo_ids(self) -> list[str]:
        return list(self.specs)

    def initial_states(self) -> dict[str, SiloState]:
        return {
            sid: SiloState(level=0.0, temp=spec.ambient_temp, homogeneity=0.0)
            for sid, spec in self.specs.items()
        }

    def read_sensors(self, states: Mapping[str, SiloState]) -> dict[str, SiloSensors]:
        image = {}
        for sid, spec in self.specs.items():
            st = states[sid]
            image[sid] = SiloSensors(
                empty=st.level <= spec.low_threshold,
                full=st.level >= spec.high_threshold,
                temp=st.temp if spec.has_temp_sensor else None,
            )
        return image

    def step(
        self,
        states: Mapping[str, SiloState],
        actuators: ActuatorImage,
        dt: float,
    ) -> StepResult:
        """Advance the plant by ``dt`` seconds under the given actuator image."""
        if dt <= 0:
            raise ValueError("dt must be strictly positive")
        unknown = set(actuators) - set(self.specs)
        if unknown:
            raise ValueError(f"actuator image names unknown silos: {sorted(unknown)}")

        faults: set[Fault] = set()

        # Capability screening: illegal heater/mixer flags fault and are ignored.
        heater_on: dict[str, bool] = {}
        mixer_on: dict[str, bool] = {}
        for sid, spec in self.specs.items():
            act = actuators.get(sid, CLOSED)
            h, m = act.heater, act.mixer
            if h and not spec.has_heater:
                faults.add(Fault(FaultCode.ILLEGAL_ACTUATOR.value, sid))
                h = False
            if m and not spec.has_mixer:
                faults.add(Fault(FaultCode.ILLEGAL_ACTUATOR.value, sid))
                m = False
            heater_on[sid] = h
            mixer_on[sid] = m

        level = {sid: states[sid].level for sid in self.specs}
        temp = {sid: states[sid].temp for sid in self.specs}
        homog = {sid: states[sid].homogeneity for sid in self.specs}

        sources = [sid for sid in self.specs if actuators.get(sid, CLOSED).out_valve]
        dests = [sid for sid in self.specs if actuators.get(sid, CLOSED).in_valve]

        inflow: set[str] = set()
        transfer_pair: tuple[str, str] | None = None
        contention = False
        jammed = len(sources) >= 2 and len(dests) >= 2

        def raw_fill(sid: str) -> None:
            spec = self.specs[sid]
            free = spec.capacity - level[sid]
            amount = min(spec.fill_rate * dt, free)
            if amount <= 0:
                return
            resident = level[sid]
            temp[sid] = (resident * temp[sid] + amount * self.supply_temp) / (resident + amount)
            level[sid] = spec.capacity if amount == free else resident + amount
            inflow.add(sid)

        def drain(sid: str) -> None:
            spec = self.specs[sid]
            amount = min(spec.drain_rate * dt, level[sid])
            if amount <= 0:
                return
            level[sid] = 0.0 if amount == level[sid] else level[sid] - amount

        if jammed:
            faults.add(Fault(FaultCode.PIPE_MULTI_SOURCE.value))
            faults.add(Fault(FaultCode.PIPE_MULTI_DEST.value))
        elif len(sources) == 1 and len(dests) == 1:
            src, dst = sources[0], dests[0]
            s_spec, d_spec = self.specs[src], self.specs[dst]
            rate = min(s_spec.drain_rate, d_spec.fill_rate)
            free = d_spec.capacity - level[dst]
            amount = min(rate * dt, level[src], free)
            if amount > 0:
                transfer_pair = (src, dst)
                if src != dst:
                    resident = level[dst]
                    temp[dst] = (resident * temp[dst] + amount * temp[src]) / (resident + amount)
                    level[dst] = d_spec.capacity if amount == free else resident + amount
                    level[src] = 0.0 if amount == level[src] else level[src] - amount
                inflow.add(dst)
        else:
            # Mixed pattern: the pipe disengages, both manifolds keep flowing.
            contention = bool(sources) and bool(dests)
            for sid in dests:
                raw_fill(sid)
            for sid in sources:
                drain(sid)

        for sid in dests:
            if level[sid] >= self.specs[sid].capacity:
                faults.add(Fault(FaultCode.OVERFLOW_RISK.value, sid))

        for sid, spec in self.specs.items():
            if heater_on[sid]:
                if level[sid] > self.dry_level:
                    temp[sid] += spec.heat_rate * dt
                else:
                    faults.add(Fault(FaultCode.DRY_HEATING.value, sid))
            # Cooling toward ambient applies every step.
            temp[sid] += (spec.ambient_temp - temp[sid]) * dt / spec.cooling_time_constant
            if sid in inflow:
                homog[sid] = 0.0
            if mixer_on[sid] and level[sid] > self.dry_level:
                homog[sid] = min(1.0, homog[sid] + dt / self.mix_time_constant)

        new_states = {
            sid: SiloState(
                level=min(max(level[sid], 0.0), self.specs[sid].capacity),
                temp=temp[sid],
                homogeneity=min(max(homog[sid], 0.0), 1.0),
            )
            for sid in self.specs
        }
        return StepResult(
            states=new_states,
            faults=frozenset(faults),
            transfer=transfer_pair,
            pipe_contention=contention,
        )


def closed_image(silo_ids: Sequence[str]) -> dict[str, SiloActuators]:
    """All valves closed, heaters and mixers off."""
    return {sid: CLOSED for sid in silo_ids}
