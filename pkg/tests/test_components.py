"""Ports, connectors, SRs and the silo controller state machine."""

import pytest

from siloplant.components import (
    Callback,
    CallbackKind,
    Command,
    CommandKind,
    InterfaceSpec,
    OpSpec,
    Port,
    SiloSR,
    build_silo_unit,
    connect,
    process_facing_port,
    silo_callback_interface,
    silo_command_interface,
)
from siloplant.config import default_config
from siloplant.errors import CommandRejected, PortError
from siloplant.plant import SiloSensors, SiloSpec, SiloState
from siloplant.runtime import ScanContext
from siloplant.system import build_system

S1 = SiloSpec(id="S1")
S4 = SiloSpec(id="S4", has_heater=True, has_mixer=True, has_temp_sensor=True)


def ctx(cycle=0):
    return ScanContext(cycle, [])


def sensors(empty=False, full=False, temp=None):
    return SiloSensors(empty=empty, full=full, temp=temp)


class TestPorts:
    def test_connect_matching_pair(self):
        unit = build_silo_unit(S4, period_s=0.5)
        received = []
        peer = process_facing_port("proc", "silo4", S4, received.append)
        connector = connect(peer, unit.process_port)
        assert peer.peer is unit.process_port
        assert unit.process_port.peer is peer
        assert peer.peer.peer is peer  # connector symmetry
        connector.disconnect()
        assert peer.peer is None and unit.process_port.peer is None

    def test_incompatible_interfaces_rejected(self):
        unit_plain = build_silo_unit(S1, period_s=0.5)
        peer_for_rich = process_facing_port("proc", "silo4", S4, lambda cb: None)
        with pytest.raises(PortError) as err:
            connect(peer_for_rich, unit_plain.process_port)
        assert err.value.code == "INCOMPATIBLE_INTERFACES"

    def test_rebinding_a_bound_port_rejected(self):
        unit = build_silo_unit(S4, period_s=0.5)
        first = process_facing_port("p1", "silo4", S4, lambda cb: None)
        connect(first, unit.process_port)
        second = process_facing_port("p2", "silo4", S4, lambda cb: None)
        with pytest.raises(PortError) as err:
            connect(second, unit.process_port)
        assert err.value.code == "PORT_ALREADY_BOUND"

    def test_call_through_unbound_port_rejected(self):
        peer = process_facing_port("proc", "silo4", S4, lambda cb: None)
        with pytest.raises(PortError) as err:
            peer.call("fill")
        assert err.value.code == "PORT_NOT_BOUND"

    def test_call_outside_required_interface_rejected(self):
        unit = build_silo_unit(S1, period_s=0.5)
        peer = process_facing_port("proc", "silo1", S1, lambda cb: None)
        connect(peer, unit.process_port)
        with pytest.raises(PortError) as err:
            peer.call("mix", 10.0)
        assert err.value.code == "UNKNOWN_OPERATION"

    def test_interface_shapes_follow_capabilities(self):
        assert silo_command_interface(S1).op_names == {"fill", "empty", "cancel"}
        assert silo_command_interface(S4).op_names == {
            "fill", "empty", "cancel", "heat_to_temp", "mix",
        }
        assert "mixing_completed" in silo_callback_interface(S4).op_names
        assert "heating_completed" not in silo_callback_interface(S1).op_names

    def test_duplicate_interface_operations_rejected(self):
        with pytest.raises(ValueError):
            InterfaceSpec("bad", (OpSpec("x"), OpSpec("x")))

    def test_port_requires_handlers_for_provided_ops(self):
        iface = InterfaceSpec("only", (OpSpec("ping"),))
        with pytest.raises(ValueError):
            Port("o", "p", provided=iface, required=iface, handlers={})


class TestSiloSR:
    def test_sr_is_a_pure_latch(self):
        sr = SiloSR(S4)
        sr.set_input(sensors(empty=True, temp=20.0))
        assert sr.input.empty is True
        sr.set_in_valve(True)
        sr.set_heater(True)
        image = sr.output_image()
        assert image.in_valve and image.heater and not image.mixer

    def test_sr_refuses_unowned_actuators(self):
        sr = SiloSR(S1)
        with pytest.raises(ValueError):
            sr.set_heater(True)
        with pytest.raises(ValueError):
            sr.set_mixer(True)

    def test_metadata_defaults(self):
        sr = SiloSR(S4)
        assert sr.metadata["model_type"] == "heating_mixing_silo"
        assert set(sr.metadata) == {"model_type", "manufacturer", "serial_number", "dimensions"}


class TestControllerCommands:
    def test_fill_accepted_when_idle(self):
        unit = build_silo_unit(S1, period_s=0.5)
        assert unit.controller.issue(Command(CommandKind.FILL)) is True
        assert unit.controller.active.kind is CommandKind.FILL

    def test_mix_unsupported_without_mixer(self):
        unit = build_silo_unit(S1, period_s=0.5)
        with pytest.raises(CommandRejected) as err:
            unit.controller.issue(Command(CommandKind.MIX, duration=10.0))
        assert err.value.code == "UNSUPPORTED"

    def test_heat_unsupported_without_heater(self):
        unit = build_silo_unit(S1, period_s=0.5)
        with pytest.raises(CommandRejected) as err:
            unit.controller.issue(Command(CommandKind.HEAT_TO_TEMP, setpoint=50.0))
        assert err.value.code == "UNSUPPORTED"

    def test_second_command_rejected_busy(self):
        unit = build_silo_unit(S1, period_s=0.5)
        unit.controller.issue(Command(CommandKind.FILL))
        with pytest.raises(CommandRejected) as err:
            unit.controller.issue(Command(CommandKind.EMPTY))
        assert err.value.code == "BUSY"

    def test_cancel_is_always_accepted_and_reports_liveness(self):
        unit = build_silo_unit(S1, period_s=0.5)
        assert unit.controller.issue(Command(CommandKind.CANCEL)) is False
        unit.controller.issue(Command(CommandKind.FILL))
        assert unit.controller.issue(Command(CommandKind.CANCEL)) is True
        assert unit.controller.idle


class TestControllerExecution:
    def collect_callbacks(self, unit):
        received = []
        peer = process_facing_port("proc", "port", unit.spec, received.append)
        connect(peer, unit.process_port)
        return received, peer

    def test_fill_holds_valve_until_full(self):
        unit = build_silo_unit(S1, period_s=0.5)
        received, _ = self.collect_callbacks(unit)
        unit.controller.issue(Command(CommandKind.FILL))
        unit.sr.set_input(sensors(full=False))
        unit.controller.execute(ctx(1))
        assert unit.sr.output_image().in_valve is True
        assert received == []
        unit.sr.set_input(sensors(full=True))
        unit.controller.execute(ctx(2))
        assert unit.sr.output_image().in_valve is False
        assert received == [Callback(CallbackKind.FILLING_COMPLETED, "S1", 2)]
        assert unit.controller.idle

    def test_fill_on_already_full_completes_first_slice(self):
        unit = build_silo_unit(S1, period_s=0.5)
        received, _ = self.collect_callbacks(unit)
        unit.sr.set_input(sensors(full=True))
        unit.controller.issue(Command(CommandKind.FILL))
        unit.controller.execute(ctx(5))
        assert received == [Callback(CallbackKind.FILLING_COMPLETED, "S1", 5)]
        assert unit.sr.output_image().in_valve is False

    def test_empty_completes_on_empty_flag(self):
        unit = build_silo_unit(S1, period_s=0.5)
        received, _ = self.collect_callbacks(unit)
        unit.controller.issue(Command(CommandKind.EMPTY))
        unit.sr.set_input(sensors(empty=False))
        unit.controller.execute(ctx(1))
        assert unit.sr.output_image().out_valve is True
        unit.sr.set_input(sensors(empty=True))
        unit.controller.execute(ctx(2))
        assert received == [Callback(CallbackKind.POURING_COMPLETED, "S1", 2)]

    def test_heat_completes_at_exact_setpoint(self):
        unit = build_silo_unit(S4, period_s=0.5)
        received, _ = self.collect_callbacks(unit)
        unit.controller.issue(Command(CommandKind.HEAT_TO_TEMP, setpoint=70.0))
        unit.sr.set_input(sensors(temp=69.9))
        unit.controller.execute(ctx(1))
        assert unit.sr.output_image().heater is True
        unit.sr.set_input(sensors(temp=70.0))  # inclusive threshold
        unit.controller.execute(ctx(2))
        assert unit.sr.output_image().heater is False
        assert received == [Callback(CallbackKind.HEATING_COMPLETED, "S4", 2)]

    def test_mix_runs_exactly_ceil_duration_over_period_cycles(self):
        unit = build_silo_unit(S4, period_s=0.5)
        received, _ = self.collect_callbacks(unit)
        unit.sr.set_input(sensors())
        unit.controller.issue(Command(CommandKind.MIX, duration=30.0))
        on_cycles = 0
        cycle = 0
        while not received:
            cycle += 1
            unit.controller.execute(ctx(cycle))
            if unit.sr.output_image().mixer:
                on_cycles += 1
            assert cycle < 100
        assert on_cycles == 60  # ceil(30 s / 0.5 s)
        assert received == [Callback(CallbackKind.MIXING_COMPLETED, "S4", 61)]

    def test_idle_controller_drives_everything_off(self):
        unit = build_silo_unit(S4, period_s=0.5)
        unit.sr.set_in_valve(True)
        unit.sr.set_heater(True)
        unit.sr.set_mixer(True)
        unit.controller.execute(ctx(1))
        image = unit.sr.output_image()
        assert not any([image.in_valve, image.out_valve, image.heater, image.mixer])

    def test_cancel_closes_actuators_immediately(self):
        unit = build_silo_unit(S4, period_s=0.5)
        unit.sr.set_input(sensors())
        unit.controller.issue(Command(CommandKind.MIX, duration=30.0))
        unit.controller.execute(ctx(1))
        assert unit.sr.output_image().mixer is True
        unit.controller.issue(Command(CommandKind.CANCEL))
        assert unit.sr.output_image().mixer is False

    def test_cancel_emits_no_callback(self):
        unit = build_silo_unit(S1, period_s=0.5)
        received, _ = self.collect_callbacks(unit)
        unit.controller.issue(Command(CommandKind.FILL))
        unit.sr.set_input(sensors(full=False))
        unit.controller.execute(ctx(1))
        unit.controller.issue(Command(CommandKind.CANCEL))
        for c in range(2, 6):
            unit.controller.execute(ctx(c))
        assert received == []


class TestSRTransparency:
    def test_sr_input_matches_plant_sensors_every_cycle(self):
        system = build_system(default_config())
        rt = system.runtime
        system.units["S2"].controller.issue(Command(CommandKind.FILL))
        for _ in range(10):
            rt.run_cycle()
            for sid, unit in system.units.items():
                assert unit.sr.input == rt.last_sensor_image[sid]
