import { describe, expect, it } from "vitest";

import { projectSnapshot, SchemaMismatch, validateSnapshot } from "../src/viewmodel.js";
import { LAYOUT, silo, snapshot } from "./fixtures.js";

describe("projectSnapshot", () => {
  it("computes fill_percent as level over capacity", () => {
    const snap = snapshot();
    snap.silos.S1 = silo({ level: 50 });
    const vm = projectSnapshot(LAYOUT, snap);
    expect(vm.silos.find((s) => s.id === "S1")?.fill_percent).toBe(50);
  });

  it("clamps fill_percent into 0..100", () => {
    const snap = snapshot();
    snap.silos.S1 = silo({ level: 140 });
    const vm = projectSnapshot(LAYOUT, snap);
    expect(vm.silos.find((s) => s.id === "S1")?.fill_percent).toBe(100);
  });

  it("renders an empty plant with free badges", () => {
    const vm = projectSnapshot(LAYOUT, snapshot());
    expect(vm.silos.every((s) => s.fill_percent === 0)).toBe(true);
    expect(vm.pipe).toBeNull();
    expect(vm.resources.every((r) => r.holder === null && r.queue_length === 0)).toBe(true);
    expect(vm.power_violation).toBe(false);
  });

  it("shows resource holders and process cards", () => {
    const snap = snapshot({
      resources: {
        PIPE: { holder: null, queue: [] },
        POWER: { holder: "p2", queue: ["p1"] },
      },
      processes: {
        p2: {
          recipe: "B", state: "MIXING_S3", held_resources: ["POWER"],
          silos: ["S2", "S3"], warnings: [], done_cycle: null,
        },
      },
    });
    snap.silos.S3 = silo({
      level: 94,
      actuators: { in_valve: false, out_valve: false, heater: false, mixer: true },
    });
    const vm = projectSnapshot(LAYOUT, snap);
    const power = vm.resources.find((r) => r.name === "POWER");
    expect(power?.holder).toBe("p2");
    expect(power?.queue_length).toBe(1);
    expect(vm.processes[0]?.state).toBe("MIXING_S3");
    expect(vm.silos.find((s) => s.id === "S3")?.mixer).toBe(true);
    expect(vm.power_violation).toBe(false);
  });

  it("derives pipe activity from the single open out/in pair", () => {
    const snap = snapshot();
    snap.silos.S1 = silo({ level: 50, actuators: { in_valve: false, out_valve: true, heater: false, mixer: false } });
    snap.silos.S4 = silo({ level: 10, actuators: { in_valve: true, out_valve: false, heater: false, mixer: false } });
    const vm = projectSnapshot(LAYOUT, snap);
    expect(vm.pipe).toEqual({ source: "S1", dest: "S4" });
  });

  it("flags the power-exclusivity violation when both mixers run", () => {
    const snap = snapshot();
    snap.silos.S3 = silo({ level: 50, actuators: { in_valve: false, out_valve: false, heater: false, mixer: true } });
    snap.silos.S4 = silo({ level: 50, actuators: { in_valve: false, out_valve: false, heater: false, mixer: true } });
    const vm = projectSnapshot(LAYOUT, snap);
    expect(vm.power_violation).toBe(true);
  });

  it("shows temperature only for silos with a sensor", () => {
    const snap = snapshot();
    snap.silos.S1 = silo({ temp: 44.4 });
    snap.silos.S2 = silo({ temp: 44.4, sensors: { empty: true, full: false, temp: 44.4 } });
    const vm = projectSnapshot(LAYOUT, snap);
    expect(vm.silos.find((s) => s.id === "S1")?.temp_display).toBeNull();
    expect(vm.silos.find((s) => s.id === "S2")?.temp_display).toBe("44.4 °C");
  });

  it("ignores unknown extra fields everywhere", () => {
    const snap = snapshot() as Record<string, unknown>;
    snap.exotic_extension = { anything: true };
    (snap.silos as Record<string, unknown>).S1 = {
      ...silo(),
      future_field: [1, 2, 3],
    };
    const vm = projectSnapshot(LAYOUT, snap);
    expect(vm.cycle_index).toBe(0);
  });

  it("raises SchemaMismatch for a missing required field", () => {
    const broken = snapshot() as Record<string, unknown>;
    delete broken.silos;
    expect(() => projectSnapshot(LAYOUT, broken)).toThrow(SchemaMismatch);
  });

  it("raises SchemaMismatch for a mistyped level", () => {
    const snap = snapshot() as { silos: Record<string, unknown> };
    snap.silos.S1 = { ...silo(), level: "lots" };
    expect(() => validateSnapshot(snap)).toThrow(SchemaMismatch);
  });

  it("raises SchemaMismatch when a configured silo is absent", () => {
    const snap = snapshot();
    delete (snap.silos as Record<string, unknown>).S4;
    expect(() => projectSnapshot(LAYOUT, snap)).toThrow(SchemaMismatch);
  });
});
