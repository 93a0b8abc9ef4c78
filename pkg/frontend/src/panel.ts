/** HTML rendering of the mimic diagram; pure string in, string out. */

import type { PanelState } from "./store.js";
import type { ActionRecord, PlantViewModel, SiloView } from "./types.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function lamp(on: boolean | null, label: string): string {
  if (on === null) return "";
  return `<span class="lamp ${on ? "on" : "off"}">${esc(label)}</span>`;
}

function siloWidget(silo: SiloView): string {
  const height = silo.fill_percent.toFixed(1);
  return `
  <div class="silo" data-silo="${esc(silo.id)}">
    <div class="silo-name">${esc(silo.id)}</div>
    <div class="tank"><div class="liquid" style="height:${height}%"></div></div>
    <div class="silo-stats">
      <span class="fill" data-role="fill">${height}%</span>
      ${silo.temp_display ? `<span class="temp">${esc(silo.temp_display)}</span>` : ""}
    </div>
    <div class="silo-lamps">
      ${lamp(silo.in_valve, "IN")}${lamp(silo.out_valve, "OUT")}
      ${lamp(silo.heater, "HEAT")}${lamp(silo.mixer, "MIX")}
      ${silo.empty ? '<span class="flag">empty</span>' : ""}
      ${silo.full ? '<span class="flag">full</span>' : ""}
    </div>
  </div>`;
}

function pipeBar(vm: PlantViewModel): string {
  if (vm.pipe === null) return '<div class="pipe idle">pipe idle</div>';
  return `<div class="pipe active">pipe: ${esc(vm.pipe.source)} → ${esc(vm.pipe.dest)}</div>`;
}

function badges(vm: PlantViewModel): string {
  const parts = vm.resources.map(
    (res) =>
      `<span class="badge" data-resource="${esc(res.name)}">${esc(res.name)}: ` +
      `${esc(res.holder ?? "free")}${res.queue_length ? ` (+${res.queue_length} waiting)` : ""}</span>`,
  );
  parts.push(`<span class="badge">cycle ${vm.cycle_index}</span>`);
  if (vm.overrun_count > 0) {
    parts.push(`<span class="badge warn">overruns: ${vm.overrun_count}</span>`);
  }
  return parts.join("");
}

function processCards(vm: PlantViewModel): string {
  if (vm.processes.length === 0) return '<div class="card none">no batches</div>';
  return vm.processes
    .map(
      (proc) => `
  <div class="card" data-process="${esc(proc.process_id)}">
    <b>${esc(proc.process_id)}</b> recipe ${esc(proc.recipe)}
    <span class="state">${esc(proc.state)}</span>
    <span class="hint">${esc(proc.progress_hint)}</span>
    ${proc.warnings.map((w) => `<div class="warning">${esc(w)}</div>`).join("")}
  </div>`,
    )
    .join("");
}

function actionRow(record: ActionRecord): string {
  const label =
    record.action.kind +
    ("target" in record.action && record.action.target ? ` ${record.action.target}` : "");
  const detail =
    record.status === "rejected"
      ? ` <span class="reason">${esc(record.reason ?? "")}</span>`
      : record.effective_cycle !== null
        ? ` @${record.effective_cycle}`
        : "";
  return `<li class="action ${record.status}" data-action-id="${record.id}">` +
    `${esc(label)} — <span class="status">${record.status}</span>${detail}</li>`;
}

export function renderHtml(state: PanelState): string {
  const vm = state.viewModel;
  const banner = state.banner
    ? `<div class="banner ${state.banner.startsWith("INVARIANT") ? "violation" : "schema"}">` +
      `${esc(state.banner)}</div>`
    : "";
  if (vm === null) {
    return `${banner}<div class="connecting">waiting for the first cycle… (${state.connection})</div>`;
  }
  return `
${banner}
<div class="status-row">connection: ${state.connection} ${badges(vm)}</div>
${pipeBar(vm)}
<div class="silos">${vm.silos.map(siloWidget).join("")}</div>
<div class="processes">${processCards(vm)}</div>
<ol class="actions">${state.actions.map(actionRow).join("")}</ol>`;
}
