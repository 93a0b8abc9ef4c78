"""Component building blocks: software representatives, controllers, ports.

A silo unit pairs the software representative (SR) of the physical silo with
the controller that turns its raw valve/heater/mixer I/O into fill / empty /
heat-to-setpoint / mix commands with completion callbacks.  Components talk
through typed ports: a port declares the interface it provides and the one it
requires, and a connector binds two ports whose declarations mirror each
other.  The SR itself adds no behavior; it only snapshots sensor input at
READ and latches actuator output for WRITE.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Mapping

from .errors import CommandRejected, PortError
from .plant import SiloActuators, SiloSensors, SiloSpec


@dataclass(frozen=True)
class OpSpec:
    """One operation in an interface: a name plus the roles of its parameters."""

    name: str
    params: tuple[str, ...] = ()


@dataclass(frozen=True)
class InterfaceSpec:
    name: str
    operations: tuple[OpSpec, ...]

    def __post_init__(self):
        names = [op.name for op in self.operations]
        if len(set(names)) != len(names):
            raise ValueError(f"interface {self.name}: duplicate operation names")

    @property
    def op_names(self) -> frozenset[str]:
        return frozenset(op.name for op in self.operations)


class Port:
    """Typed interaction point. ``handlers`` implement the provided operations."""

    def __init__(
        self,
        owner: str,
        name: str,
        provided: InterfaceSpec,
        required: InterfaceSpec,
        handlers: Mapping[str, Callable],
    ):
        missing = provided.op_names - set(handlers)
        if missing:
            raise ValueError(f"port {owner}.{name}: no handler for {sorted(missing)}")
        self.owner = owner
        self.name = name
        self.provided = provided
        self.required = required
        self.handlers = dict(handlers)
        self.peer: Port | None = None

    @property
    def bound(self) -> bool:
        return self.peer is not None

    def call(self, op: str, *args, **kwargs):
        """Invoke ``op`` on whatever is connected to this port."""
        if self.peer is None:
            raise PortError("PORT_NOT_BOUND", f"port {self.owner}.{self.name} is not connected")
        if op not in self.required.op_names:
            raise PortError(
                "UNKNOWN_OPERATION",
                f"{op} is not part of required interface {self.required.name}",
            )
        return self.peer.handlers[op](*args, **kwargs)

    def __repr__(self):
        return f"Port({self.owner}.{self.name}, provided={self.provided.name}, required={self.required.name})"


class Connector:
    """The bond between two compliant ports."""

    def __init__(self, a: Port, b: Port):
        self.a = a
        self.b = b

    def disconnect(self) -> None:
        if self.a.peer is self.b:
            self.a.peer = None
        if self.b.peer is self.a:
            self.b.peer = None


def connect(a: Port, b: Port) -> Connector:
    """Bind two ports; each side's required interface must be the other's provided."""
    if a.bound or b.bound:
        taken = a if a.bound else b
        raise PortError("PORT_ALREADY_BOUND", f"port {taken.owner}.{taken.name} is already connected")
    if a.required != b.provided or b.required != a.provided:
        raise PortError(
            "INCOMPATIBLE_INTERFACES",
            f"cannot connect {a.owner}.{a.name} ({a.provided.name}/{a.required.name}) "
            f"to {b.owner}.{b.name} ({b.provided.name}/{b.required.name})",
        )
    a.peer = b
    b.peer = a
    return Connector(a, b)


class CommandKind(str, enum.Enum):
    FILL = "FILL"
    EMPTY = "EMPTY"
    HEAT_TO_TEMP = "HEAT_TO_TEMP"
    MIX = "MIX"
    CANCEL = "CANCEL"


class CallbackKind(str, enum.Enum):
    FILLING_COMPLETED = "FILLING_COMPLETED"
    POURING_COMPLETED = "POURING_COMPLETED"
    HEATING_COMPLETED = "HEATING_COMPLETED"
    MIXING_COMPLETED = "MIXING_COMPLETED"


COMPLETION_OF = {
    CommandKind.FILL: CallbackKind.FILLING_COMPLETED,
    CommandKind.EMPTY: CallbackKind.POURING_COMPLETED,
    CommandKind.HEAT_TO_TEMP: CallbackKind.HEATING_COMPLETED,
    CommandKind.MIX: CallbackKind.MIXING_COMPLETED,
}

CALLBACK_OPS = {
    CallbackKind.FILLING_COMPLETED: "filling_completed",
    CallbackKind.POURING_COMPLETED: "pouring_completed",
    CallbackKind.HEATING_COMPLETED: "heating_completed",
    CallbackKind.MIXING_COMPLETED: "mixing_completed",
}


@dataclass(frozen=True)
class Command:
    kind: CommandKind
    setpoint: float | None = None      # HEAT_TO_TEMP only
    duration: float | None = None      # MIX only, seconds
    issue_cycle: int | None = None


@dataclass(frozen=True)
class Callback:
    kind: CallbackKind
    silo_id: str
    cycle: int | None


def silo_command_interface(spec: SiloSpec) -> InterfaceSpec:
    """Command surface a silo controller provides, shaped by its capabilities."""
    ops = [OpSpec("fill"), OpSpec("empty"), OpSpec("cancel")]
    if spec.has_heater:
        ops.append(OpSpec("heat_to_temp", ("setpoint",)))
    if spec.has_mixer:
        ops.append(OpSpec("mix", ("duration",)))
    return InterfaceSpec(f"{spec.kind}_commands", tuple(ops))


def silo_callback_interface(spec: SiloSpec) -> InterfaceSpec:
    """Completion notifications the controller emits back through its port."""
    ops = [OpSpec("filling_completed", ("callback",)), OpSpec("pouring_completed", ("callback",))]
    if spec.has_heater:
        ops.append(OpSpec("heating_completed", ("callback",)))
    if spec.has_mixer:
        ops.append(OpSpec("mixing_completed", ("callback",)))
    return InterfaceSpec(f"{spec.kind}_callbacks", tuple(ops))


def default_metadata(spec: SiloSpec) -> dict[str, str]:
    return {
        "model_type": spec.kind,
        "manufacturer": "unspecified",
        "serial_number": f"sr-{spec.id.lower()}",
        "dimensions": f"{spec.capacity:g} l",
    }


class SiloSR:
    """Software representative: the silo's I/O image plus identity metadata."""

    def __init__(self, spec: SiloSpec, metadata: dict[str, str] | None = None):
        self.spec = spec
        self.silo_id = spec.id
        self.metadata = metadata or default_metadata(spec)
        self.input: SiloSensors | None = None
        self._in_valve = False
        self._out_valve = False
        self._heater = False
        self._mixer = False

    def set_input(self, sensors: SiloSensors) -> None:
        self.input = sensors

    def set_in_valve(self, value: bool) -> None:
        self._in_valve = value

    def set_out_valve(self, value: bool) -> None:
        self._out_valve = value

    def set_heater(self, value: bool) -> None:
        if value and not self.spec.has_heater:
            raise ValueError(f"silo {self.silo_id} has no heater")
        self._heater = value

    def set_mixer(self, value: bool) -> None:
        if value and not self.spec.has_mixer:
            raise ValueError(f"silo {self.silo_id} has no mixer")
        self._mixer = value

    def output_image(self) -> SiloActuators:
        return SiloActuators(
            in_valve=self._in_valve,
            out_valve=self._out_valve,
            heater=self._heater,
            mixer=self._mixer,
        )


class SiloController:
    """Scan-cycle state machine over one SR.

    At most one command is active at a time.  Each execute slice holds the
    active command's actuator and completes against this cycle's sensor
    snapshot: FILL on the full flag, EMPTY on the empty flag, HEAT_TO_TEMP on
    temp >= setpoint (inclusive), MIX after ceil(duration/period) slices.
    Idle slices drive every owned actuator closed/off.  CANCEL latches the
    actuators closed immediately and completes silently.
    """

    def __init__(self, spec: SiloSpec, sr: SiloSR, period_s: float):
        self.spec = spec
        self.sr = sr
        self.silo_id = spec.id
        self.name = f"ctrl_{spec.id}"
        self.period_s = period_s
        self.active: Command | None = None
        self._mix_slices_left = 0
        self._ctx = None
        self.process_port = Port(
            owner=self.name,
            name="process_port",
            provided=silo_command_interface(spec),
            required=silo_callback_interface(spec),
            handlers=self._handlers(),
        )

    def _handlers(self) -> dict[str, Callable]:
        handlers = {
            "fill": lambda: self.issue(Command(CommandKind.FILL)),
            "empty": lambda: self.issue(Command(CommandKind.EMPTY)),
            "cancel": lambda: self.issue(Command(CommandKind.CANCEL)),
        }
        if self.spec.has_heater:
            handlers["heat_to_temp"] = lambda setpoint: self.issue(
                Command(CommandKind.HEAT_TO_TEMP, setpoint=setpoint)
            )
        if self.spec.has_mixer:
            handlers["mix"] = lambda duration: self.issue(
                Command(CommandKind.MIX, duration=duration)
            )
        return handlers

    @property
    def idle(self) -> bool:
        return self.active is None

    def issue(self, cmd: Command):
        """Accept or reject a command.

        Returns True for an accepted command; for CANCEL, returns whether a
        command was actually cancelled (so callers can tell a live cancel from
        a no-op).  An accepted command is first acted on at the controller's
        next execute slice.
        """
        if cmd.kind is CommandKind.CANCEL:
            previous = self.active
            self.active = None
            self._mix_slices_left = 0
            self._close_all()
            self._record(
                {
                    "type": "command_cancelled",
                    "silo": self.silo_id,
                    "was_active": previous is not None,
                    "cancelled_kind": previous.kind.value if previous else None,
                }
            )
            return previous is not None
        if cmd.kind is CommandKind.HEAT_TO_TEMP and not (
            self.spec.has_heater and self.spec.has_temp_sensor
        ):
            raise CommandRejected(
                "UNSUPPORTED", f"silo {self.silo_id} cannot heat to a setpoint"
            )
        if cmd.kind is CommandKind.MIX and not self.spec.has_mixer:
            raise CommandRejected("UNSUPPORTED", f"silo {self.silo_id} has no mixer")
        if cmd.kind is CommandKind.HEAT_TO_TEMP and cmd.setpoint is None:
            raise CommandRejected("UNSUPPORTED", "HEAT_TO_TEMP needs a setpoint")
        if cmd.kind is CommandKind.MIX and (cmd.duration is None or cmd.duration < 0):
            raise CommandRejected("UNSUPPORTED", "MIX needs a non-negative duration")
        if self.active is not None:
            raise CommandRejected(
                "BUSY", f"silo {self.silo_id} is busy with {self.active.kind.value}"
            )
        if cmd.issue_cycle is None and self._ctx is not None:
            cmd = Command(cmd.kind, cmd.setpoint, cmd.duration, issue_cycle=self._ctx.cycle)
        self.active = cmd
        if cmd.kind is CommandKind.MIX:
            self._mix_slices_left = math.ceil(cmd.duration / self.period_s - 1e-9)
        self._record(
            {
                "type": "command_issued",
                "silo": self.silo_id,
                "kind": cmd.kind.value,
                "setpoint": cmd.setpoint,
                "duration": cmd.duration,
            }
        )
        return True

    def execute(self, ctx) -> None:
        self._ctx = ctx
        cmd = self.active
        if cmd is None:
            self._close_all()
            return
        sensors = self.sr.input
        if cmd.kind is CommandKind.FILL:
            if sensors is not None and sensors.full:
                self.sr.set_in_valve(False)
                self._complete(CallbackKind.FILLING_COMPLETED, ctx)
            else:
                self.sr.set_in_valve(True)
        elif cmd.kind is CommandKind.EMPTY:
            if sensors is not None and sensors.empty:
                self.sr.set_out_valve(False)
                self._complete(CallbackKind.POURING_COMPLETED, ctx)
            else:
                self.sr.set_out_valve(True)
        elif cmd.kind is CommandKind.HEAT_TO_TEMP:
            if sensors is not None and sensors.temp is not None and sensors.temp >= cmd.setpoint:
                self.sr.set_heater(False)
                self._complete(CallbackKind.HEATING_COMPLETED, ctx)
            else:
                self.sr.set_heater(True)
        elif cmd.kind is CommandKind.MIX:
            if self._mix_slices_left > 0:
                self.sr.set_mixer(True)
                self._mix_slices_left -= 1
            else:
                self.sr.set_mixer(False)
                self._complete(CallbackKind.MIXING_COMPLETED, ctx)

    def _complete(self, kind: CallbackKind, ctx) -> None:
        self.active = None
        callback = Callback(kind=kind, silo_id=self.silo_id, cycle=ctx.cycle if ctx else None)
        self._record(
            {"type": "callback", "kind": kind.value, "silo": self.silo_id}
        )
        if self.process_port.bound:
            self.process_port.call(CALLBACK_OPS[kind], callback)

    def _close_all(self) -> None:
        self.sr.set_in_valve(False)
        self.sr.set_out_valve(False)
        if self.spec.has_heater:
            self.sr.set_heater(False)
        if self.spec.has_mixer:
            self.sr.set_mixer(False)

    def _record(self, event: dict) -> None:
        if self._ctx is not None:
            self._ctx.record(event)


@dataclass
class SiloUnit:
    """One cyber-physical silo: spec, SR and controller bundled together.

    The unit's outward port is the controller's process port, exposed by
    plain delegation; the unit boundary adds no behavior of its own.
    """

    spec: SiloSpec
    sr: SiloSR
    controller: SiloController

    @property
    def silo_id(self) -> str:
        return self.spec.id

    @property
    def process_port(self) -> Port:
        return self.controller.process_port


def build_silo_unit(spec: SiloSpec, period_s: float, metadata: dict[str, str] | None = None) -> SiloUnit:
    sr = SiloSR(spec, metadata)
    controller = SiloController(spec, sr, period_s)
    return SiloUnit(spec=spec, sr=sr, controller=controller)


def process_facing_port(
    owner: str, name: str, spec: SiloSpec, on_callback: Callable[[Callback], None]
) -> Port:
    """The process-side counterpart of a silo controller's process port."""
    callback_if = silo_callback_interface(spec)
    handlers = {op.name: on_callback for op in callback_if.operations}
    return Port(
        owner=owner,
        name=name,
        provided=callback_if,
        required=silo_command_interface(spec),
        handlers=handlers,
    )
