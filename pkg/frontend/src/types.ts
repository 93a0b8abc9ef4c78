/** Wire shapes of the control service plus the panel's own view model. */

export interface SiloSensors {
  empty: boolean;
  full: boolean;
  temp: number | null;
}

export interface SiloActuators {
  in_valve: boolean;
  out_valve: boolean;
  heater: boolean;
  mixer: boolean;
}

export interface SiloSnapshot {
  level: number;
  temp: number;
  homogeneity: number;
  sensors: SiloSensors;
  actuators: SiloActuators;
}

export interface ResourceState {
  holder: string | null;
  queue: string[];
}

export interface ProcessSnapshot {
  recipe: string;
  state: string;
  held_resources: string[];
  silos: string[];
  warnings: string[];
  done_cycle: number | null;
}

export interface StateSnapshot {
  cycle_index: number;
  silos: Record<string, SiloSnapshot>;
  resources: Record<string, ResourceState>;
  processes: Record<string, ProcessSnapshot>;
  overrun_count: number;
}

export interface EventMessage {
  cycle_index: number;
  state: StateSnapshot;
  events: Array<Record<string, unknown>>;
  faults: string[];
  overrun: boolean;
}

export interface SiloLayout {
  id: string;
  capacity: number;
  has_heater: boolean;
  has_mixer: boolean;
  has_temp_sensor: boolean;
  low_threshold: number;
  high_threshold: number;
}

export interface PlantLayout {
  period_ms: number;
  silos: SiloLayout[];
  recipes: string[];
}

export interface ModelResponse {
  component_model: unknown;
  plant: PlantLayout;
}

/** What the mimic diagram actually renders. */

export interface SiloView {
  id: string;
  fill_percent: number;
  level: number;
  temp_display: string | null;
  empty: boolean;
  full: boolean;
  in_valve: boolean;
  out_valve: boolean;
  heater: boolean | null; // null = the silo has no heater
  mixer: boolean | null;
}

export interface ProcessCard {
  process_id: string;
  recipe: string;
  state: string;
  progress_hint: string;
  warnings: string[];
}

export interface ResourceBadge {
  name: string;
  holder: string | null;
  queue_length: number;
}

export interface PlantViewModel {
  cycle_index: number;
  silos: SiloView[];
  pipe: { source: string; dest: string } | null;
  processes: ProcessCard[];
  resources: ResourceBadge[];
  overrun_count: number;
  power_violation: boolean;
}

/** Operator intents; each maps 1:1 onto one control-service request. */

export type OperatorAction =
  | { kind: "START_A"; parameters?: RecipeOverrides }
  | { kind: "START_B"; parameters?: RecipeOverrides }
  | { kind: "ABORT"; target: string }
  | { kind: "TOGGLE_ACTUATOR"; target: string; actuator: string; value: boolean }
  | { kind: "PAUSE" }
  | { kind: "RESUME" }
  | { kind: "STEP"; n?: number };

export interface RecipeOverrides {
  setpoint?: number;
  mix_duration?: number;
  dwell_s1?: number;
}

export type ActionStatus = "pending" | "confirmed" | "rejected";

export interface ActionRecord {
  id: number;
  action: OperatorAction;
  status: ActionStatus;
  effective_cycle: number | null;
  reason: string | null;
}
