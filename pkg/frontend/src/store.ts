/** Panel state: the latest view model, the action ledger and reconciliation.
 *
 * All rendering reads from here, and every state-changing request leaves
 * through dispatch().  Event messages drive the view; whenever the stream
 * skips cycles or goes down, the store re-reads GET /api/state, so the
 * panel is eventually consistent even on a lossy stream.
 */

import type { ServiceClient } from "./client.js";
import { RequestRejected } from "./client.js";
import { projectSnapshot, SchemaMismatch } from "./viewmodel.js";
import type {
  ActionRecord,
  EventMessage,
  OperatorAction,
  PlantLayout,
  PlantViewModel,
} from "./types.js";

export type ConnectionState = "connecting" | "live" | "degraded";

export interface PanelState {
  connection: ConnectionState;
  viewModel: PlantViewModel | null;
  actions: ActionRecord[];
  banner: string | null;
  lastEvents: Array<Record<string, unknown>>;
}

const ACTION_LOG_LIMIT = 20;

export class PanelStore {
  readonly state: PanelState = {
    connection: "connecting",
    viewModel: null,
    actions: [],
    banner: null,
    lastEvents: [],
  };
  reconcileCount = 0;
  private lastCycle: number | null = null;
  private nextActionId = 1;
  private listeners: Array<() => void> = [];
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly client: ServiceClient,
    private readonly layout: PlantLayout,
    private readonly pollIntervalMs = 1000,
  ) {}

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  // -- event stream ----------------------------------------------------

  ingestEvent(raw: unknown): void {
    const message = raw as Partial<EventMessage>;
    if (typeof message?.cycle_index !== "number" || message.state === undefined) {
      this.state.banner = "SCHEMA_MISMATCH: unrecognized event message";
      this.notify();
      return;
    }
    const gap = this.lastCycle !== null && message.cycle_index > this.lastCycle + 1;
    this.applySnapshot(message.state, message.cycle_index);
    this.state.lastEvents = Array.isArray(message.events)
      ? (message.events as Array<Record<string, unknown>>)
      : [];
    this.state.connection = "live";
    if (gap) {
      // Messages were dropped; re-read the authoritative state.
      void this.reconcile();
    }
    this.notify();
  }

  streamDown(): void {
    this.state.connection = "degraded";
    this.startPolling();
    this.notify();
  }

  private startPolling(): void {
    if (this.pollTimer !== null) return;
    this.pollTimer = setInterval(() => {
      if (this.state.connection === "live") {
        this.stopPolling();
        return;
      }
      void this.reconcile();
    }, this.pollIntervalMs);
  }

  private stopPolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  async reconcile(): Promise<void> {
    try {
      const snapshot = await this.client.getState();
      const cycle = typeof snapshot.cycle_index === "number" ? snapshot.cycle_index : null;
      if (cycle !== null && (this.lastCycle === null || cycle >= this.lastCycle)) {
        this.applySnapshot(snapshot, cycle);
      }
      this.reconcileCount += 1;
      this.notify();
    } catch {
      // Service unreachable; polling or the stream will retry.
    }
  }

  private applySnapshot(raw: unknown, cycle: number): void {
    try {
      this.state.viewModel = projectSnapshot(this.layout, raw);
      this.state.banner = this.state.viewModel.power_violation
        ? "INVARIANT VIOLATION: both mixers are on"
        : null;
    } catch (error) {
      if (error instanceof SchemaMismatch) {
        this.state.banner = `SCHEMA_MISMATCH: ${error.message}`;
        return; // keep the previous view model on screen
      }
      throw error;
    }
    this.lastCycle = cycle;
    this.confirmActions(cycle);
  }

  // -- operator actions --------------------------------------------------

  private confirmActions(cycle: number): void {
    for (const record of this.state.actions) {
      if (
        record.status === "pending" &&
        record.effective_cycle !== null &&
        cycle >= record.effective_cycle
      ) {
        record.status = "confirmed";
      }
    }
  }

  async dispatch(action: OperatorAction): Promise<ActionRecord> {
    const record: ActionRecord = {
      id: this.nextActionId++,
      action,
      status: "pending",
      effective_cycle: null,
      reason: null,
    };
    this.state.actions.unshift(record);
    this.state.actions.splice(ACTION_LOG_LIMIT);
    this.notify();
    try {
      const reply = await this.client.send(action);
      record.effective_cycle =
        typeof reply.effective_cycle === "number" ? reply.effective_cycle : null;
      if (record.effective_cycle === null) {
        record.status = "confirmed";
      } else if (this.lastCycle !== null && this.lastCycle >= record.effective_cycle) {
        record.status = "confirmed";
      }
    } catch (error) {
      record.status = "rejected";
      record.reason =
        error instanceof RequestRejected
          ? `${error.code}: ${error.message}`
          : `network failure: ${String(error)} (retry?)`;
    }
    this.notify();
    return record;
  }
}
