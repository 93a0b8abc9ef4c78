import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { RequestRejected, type CommandReply, type ServiceClient } from "../src/client.js";
import { renderHtml } from "../src/panel.js";
import { PanelStore } from "../src/store.js";
import { LAYOUT, message, silo, snapshot } from "./fixtures.js";

class FakeClient {
  stateReplies: CommandReply[] = [];
  sendReply: CommandReply | Error = { effective_cycle: 5 };
  getStateCalls = 0;

  async getState(): Promise<CommandReply> {
    this.getStateCalls += 1;
    const reply = this.stateReplies.shift();
    if (reply === undefined) throw new Error("no canned state");
    return reply;
  }

  async send(): Promise<CommandReply> {
    if (this.sendReply instanceof Error) throw this.sendReply;
    return this.sendReply;
  }
}

function makeStore(client: FakeClient, pollMs = 1000): PanelStore {
  return new PanelStore(client as unknown as ServiceClient, LAYOUT, pollMs);
}

describe("PanelStore action lifecycle", () => {
  it("moves pending -> confirmed when the effective cycle arrives", async () => {
    const client = new FakeClient();
    client.sendReply = { process_id: "p1", effective_cycle: 5 };
    const store = makeStore(client);
    const pendingSeen = store.dispatch({ kind: "START_A" });
    expect(store.state.actions[0]?.status).toBe("pending");
    const record = await pendingSeen;
    expect(record.status).toBe("pending"); // cycle 5 not observed yet
    store.ingestEvent(message(4));
    expect(record.status).toBe("pending");
    store.ingestEvent(message(5));
    expect(record.status).toBe("confirmed");
  });

  it("renders a rejection reason verbatim", async () => {
    const client = new FakeClient();
    client.sendReply = new RequestRejected("CONFLICT", "silo S1 is claimed by a live process");
    const store = makeStore(client);
    store.ingestEvent(message(1));
    const record = await store.dispatch({
      kind: "TOGGLE_ACTUATOR", target: "S1", actuator: "in_valve", value: true,
    });
    expect(record.status).toBe("rejected");
    expect(record.reason).toContain("CONFLICT");
    const html = renderHtml(store.state);
    expect(html).toContain("CONFLICT");
    expect(html).toContain("rejected");
  });

  it("marks network failures with a retry prompt", async () => {
    const client = new FakeClient();
    client.sendReply = new TypeError("fetch failed");
    const store = makeStore(client);
    const record = await store.dispatch({ kind: "START_B" });
    expect(record.status).toBe("rejected");
    expect(record.reason).toContain("retry");
  });
});

describe("PanelStore stream handling", () => {
  it("updates the view model from event messages", () => {
    const client = new FakeClient();
    const store = makeStore(client);
    const snap = snapshot({ cycle_index: 3 });
    snap.silos.S1 = silo({ level: 42 });
    store.ingestEvent(message(3, snap));
    expect(store.state.viewModel?.cycle_index).toBe(3);
    expect(store.state.viewModel?.silos[0]?.fill_percent).toBe(42);
    expect(store.state.connection).toBe("live");
  });

  it("reconciles against GET /api/state when messages are dropped", async () => {
    const client = new FakeClient();
    const freshest = snapshot({ cycle_index: 9 }) as unknown as CommandReply;
    client.stateReplies = [freshest, freshest, freshest, freshest];
    const store = makeStore(client);
    let cycle = 0;
    for (let i = 0; i < 9; i++) {
      cycle += 1;
      if (cycle % 3 === 0) continue; // drop every third message
      store.ingestEvent(message(cycle));
    }
    await vi.waitFor(() => expect(store.reconcileCount).toBeGreaterThan(0));
    expect(client.getStateCalls).toBeGreaterThan(0);
    expect(store.state.viewModel?.cycle_index).toBe(9);
  });

  it("shows a schema banner instead of crashing on a bad message", () => {
    const client = new FakeClient();
    const store = makeStore(client);
    store.ingestEvent(message(1));
    store.ingestEvent({ cycle_index: 2, state: { silos: "garbage" } });
    expect(store.state.banner).toContain("SCHEMA_MISMATCH");
    // The previous view model stays on screen.
    expect(store.state.viewModel?.cycle_index).toBe(1);
    store.ingestEvent(message(3));
    expect(store.state.banner).toBeNull();
  });

  it("raises the violation banner when both mixers are reported on", () => {
    const client = new FakeClient();
    const store = makeStore(client);
    const snap = snapshot({ cycle_index: 1 });
    snap.silos.S3 = silo({ level: 50, actuators: { in_valve: false, out_valve: false, heater: false, mixer: true } });
    snap.silos.S4 = silo({ level: 50, actuators: { in_valve: false, out_valve: false, heater: false, mixer: true } });
    store.ingestEvent(message(1, snap));
    expect(store.state.banner).toContain("INVARIANT VIOLATION");
    expect(renderHtml(store.state)).toContain("INVARIANT VIOLATION");
  });
});

describe("PanelStore polling fallback", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("polls at 1 Hz while the stream is down and stops when live again", async () => {
    const client = new FakeClient();
    client.stateReplies = Array(10).fill(snapshot({ cycle_index: 7 }) as unknown as CommandReply);
    const store = makeStore(client, 1000);
    store.streamDown();
    expect(store.state.connection).toBe("degraded");
    await vi.advanceTimersByTimeAsync(3100);
    expect(client.getStateCalls).toBe(3);
    store.ingestEvent(message(8));
    expect(store.state.connection).toBe("live");
    await vi.advanceTimersByTimeAsync(3000);
    expect(client.getStateCalls).toBeLessThanOrEqual(4); // at most one more tick
  });
});
