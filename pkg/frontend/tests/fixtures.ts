import type {
  EventMessage,
  PlantLayout,
  SiloSnapshot,
  StateSnapshot,
} from "../src/types.js";

export const LAYOUT: PlantLayout = {
  period_ms: 500,
  recipes: ["A", "B"],
  silos: [
    { id: "S1", capacity: 100, has_heater: false, has_mixer: false, has_temp_sensor: false, low_threshold: 2, high_threshold: 95 },
    { id: "S2", capacity: 100, has_heater: true, has_mixer: false, has_temp_sensor: true, low_threshold: 2, high_threshold: 95 },
    { id: "S3", capacity: 100, has_heater: false, has_mixer: true, has_temp_sensor: false, low_threshold: 2, high_threshold: 95 },
    { id: "S4", capacity: 100, has_heater: true, has_mixer: true, has_temp_sensor: true, low_threshold: 2, high_threshold: 95 },
  ],
};

export function silo(overrides: Partial<SiloSnapshot> = {}): SiloSnapshot {
  return {
    level: 0,
    temp: 20,
    homogeneity: 0,
    sensors: { empty: true, full: false, temp: null },
    actuators: { in_valve: false, out_valve: false, heater: false, mixer: false },
    ...overrides,
  };
}

export function snapshot(overrides: Partial<StateSnapshot> = {}): StateSnapshot {
  return {
    cycle_index: 0,
    silos: { S1: silo(), S2: silo(), S3: silo(), S4: silo() },
    resources: {
      PIPE: { holder: null, queue: [] },
      POWER: { holder: null, queue: [] },
    },
    processes: {},
    overrun_count: 0,
    ...overrides,
  };
}

export function message(cycle: number, state?: StateSnapshot): EventMessage {
  const snap = state ?? snapshot({ cycle_index: cycle });
  snap.cycle_index = cycle;
  return { cycle_index: cycle, state: snap, events: [], faults: [], overrun: false };
}
