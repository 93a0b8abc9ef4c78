/** Pure projection of a state snapshot onto the mimic view model.
 *
 * Unknown extra fields are ignored so newer services keep working; missing
 * or mis-typed required fields raise SchemaMismatch, which the store turns
 * into a banner instead of a crash.
 */

import type {
  PlantLayout,
  PlantViewModel,
  ProcessCard,
  SiloView,
  StateSnapshot,
} from "./types.js";

export class SchemaMismatch extends Error {
  constructor(detail: string) {
    super(`snapshot does not match the expected schema: ${detail}`);
  }
}

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function numberField(obj: Record<string, unknown>, key: string, where: string): number {
  const value = obj[key];
  if (typeof value !== "number" || Number.isNaN(value)) {
    throw new SchemaMismatch(`${where}.${key} is not a number`);
  }
  return value;
}

function clampPercent(value: number): number {
  return Math.min(100, Math.max(0, value));
}

/** Validate just enough of an incoming snapshot to render it. */
export function validateSnapshot(raw: unknown): StateSnapshot {
  if (!isRecord(raw)) throw new SchemaMismatch("snapshot is not an object");
  const cycle = numberField(raw, "cycle_index", "snapshot");
  if (!isRecord(raw.silos)) throw new SchemaMismatch("snapshot.silos missing");
  for (const [id, silo] of Object.entries(raw.silos)) {
    if (!isRecord(silo)) throw new SchemaMismatch(`silos.${id} is not an object`);
    numberField(silo, "level", `silos.${id}`);
    numberField(silo, "temp", `silos.${id}`);
    if (!isRecord(silo.actuators)) throw new SchemaMismatch(`silos.${id}.actuators missing`);
    if (!isRecord(silo.sensors)) throw new SchemaMismatch(`silos.${id}.sensors missing`);
  }
  const resources = isRecord(raw.resources) ? raw.resources : {};
  const processes = isRecord(raw.processes) ? raw.processes : {};
  return {
    cycle_index: cycle,
    silos: raw.silos as StateSnapshot["silos"],
    resources: resources as StateSnapshot["resources"],
    processes: processes as StateSnapshot["processes"],
    overrun_count: typeof raw.overrun_count === "number" ? raw.overrun_count : 0,
  };
}

function progressHint(state: string): string {
  return state.toLowerCase().replace(/_/g, " ");
}

export function projectSnapshot(layout: PlantLayout, raw: unknown): PlantViewModel {
  const snapshot = validateSnapshot(raw);
  const silos: SiloView[] = [];
  let openIn: string | null = null;
  let openOut: string | null = null;
  let multiIn = false;
  let multiOut = false;

  for (const spec of layout.silos) {
    const silo = snapshot.silos[spec.id];
    if (silo === undefined) {
      throw new SchemaMismatch(`snapshot lacks configured silo ${spec.id}`);
    }
    const acts = silo.actuators;
    if (acts.in_valve) {
      multiIn = openIn !== null;
      openIn = spec.id;
    }
    if (acts.out_valve) {
      multiOut = openOut !== null;
      openOut = spec.id;
    }
    silos.push({
      id: spec.id,
      fill_percent: clampPercent((100 * silo.level) / spec.capacity),
      level: silo.level,
      temp_display: spec.has_temp_sensor ? `${silo.temp.toFixed(1)} °C` : null,
      empty: Boolean(silo.sensors.empty),
      full: Boolean(silo.sensors.full),
      in_valve: Boolean(acts.in_valve),
      out_valve: Boolean(acts.out_valve),
      heater: spec.has_heater ? Boolean(acts.heater) : null,
      mixer: spec.has_mixer ? Boolean(acts.mixer) : null,
    });
  }

  const processes: ProcessCard[] = Object.entries(snapshot.processes).map(
    ([pid, proc]) => ({
      process_id: pid,
      recipe: proc.recipe,
      state: proc.state,
      progress_hint: progressHint(proc.state),
      warnings: Array.isArray(proc.warnings) ? proc.warnings : [],
    }),
  );

  const resources = Object.entries(snapshot.resources).map(([name, res]) => ({
    name,
    holder: res.holder ?? null,
    queue_length: Array.isArray(res.queue) ? res.queue.length : 0,
  }));

  const mixersOn = silos.filter((s) => s.mixer === true).length;

  return {
    cycle_index: snapshot.cycle_index,
    silos,
    pipe:
      openIn !== null && openOut !== null && !multiIn && !multiOut
        ? { source: openOut, dest: openIn }
        : null,
    processes,
    resources,
    overrun_count: snapshot.overrun_count,
    power_violation: mixersOn > 1,
  };
}
