/** Browser bootstrap: wire the client, store, stream and controls. */

import { EventStream, ServiceClient } from "./client.js";
import { renderHtml } from "./panel.js";
import { PanelStore } from "./store.js";
import type { OperatorAction } from "./types.js";

async function boot(): Promise<void> {
  const base = new URLSearchParams(location.search).get("service") ?? location.origin;
  const client = new ServiceClient(base);
  const model = await client.getModel();
  const store = new PanelStore(client, model.plant);

  const root = document.getElementById("panel");
  const controls = document.getElementById("controls");
  if (root === null || controls === null) throw new Error("panel markup missing");

  store.subscribe(() => {
    root.innerHTML = renderHtml(store.state);
  });

  const buttons: Array<[string, OperatorAction]> = [
    ["Start A", { kind: "START_A" }],
    ["Start B", { kind: "START_B" }],
    ["Pause", { kind: "PAUSE" }],
    ["Resume", { kind: "RESUME" }],
    ["Step", { kind: "STEP" }],
  ];
  for (const [label, action] of buttons) {
    const button = document.createElement("button");
    button.textContent = label;
    button.onclick = () => void store.dispatch(action);
    controls.append(button);
  }
  const abort = document.createElement("button");
  abort.textContent = "Abort latest";
  abort.onclick = () => {
    const processes = store.state.viewModel?.processes ?? [];
    const live = processes.filter((p) => p.state !== "DONE" && p.state !== "ABORTED");
    const target = live[live.length - 1];
    if (target) void store.dispatch({ kind: "ABORT", target: target.process_id });
  };
  controls.append(abort);

  // Manual actuator toggles (only honored on unclaimed silos).
  for (const silo of model.plant.silos) {
    const toggle = document.createElement("button");
    toggle.textContent = `${silo.id} IN valve`;
    toggle.onclick = () => {
      const current = store.state.viewModel?.silos.find((s) => s.id === silo.id);
      void store.dispatch({
        kind: "TOGGLE_ACTUATOR",
        target: silo.id,
        actuator: "in_valve",
        value: !(current?.in_valve ?? false),
      });
    };
    controls.append(toggle);
  }

  const stream = new EventStream(client.websocketUrl());
  stream.onMessage = (message) => store.ingestEvent(message);
  stream.onDown = () => store.streamDown();
  stream.start();
  void store.reconcile(); // initial state before the first stream message
}

void boot().catch((error) => {
  const root = document.getElementById("panel");
  if (root) root.textContent = `failed to start: ${String(error)}`;
});
