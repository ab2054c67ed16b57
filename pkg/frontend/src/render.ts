/** DOM rendering: pure functions of view-model data onto container elements. */

import type { InteractionRecord, PlanDocument } from "./types.js";
import type { RobotView } from "./robot.js";
import { ledCss } from "./robot.js";
import { topologicalLayers } from "./plan.js";

export function renderTranscript(
  container: HTMLElement,
  records: InteractionRecord[],
): void {
  container.replaceChildren();
  for (const rec of records) {
    const row = container.ownerDocument.createElement("div");
    row.className = `record record-${rec.kind}`;
    row.dataset.seq = String(rec.seq);
    const label = container.ownerDocument.createElement("span");
    label.className = "record-actor";
    label.textContent = `${rec.actor} [${rec.kind}]`;
    const body = container.ownerDocument.createElement("span");
    body.className = "record-content";
    body.textContent = rec.content;
    if (rec.misunderstood_flag) {
      row.classList.add("misunderstood");
    }
    row.append(label, body);
    container.appendChild(row);
  }
}

export function renderRobot(container: HTMLElement, view: RobotView): void {
  const doc = container.ownerDocument;
  container.replaceChildren();

  const swatch = doc.createElement("div");
  swatch.className = "led-swatch";
  swatch.style.backgroundColor = ledCss(view.led);
  swatch.title = ledCss(view.led);

  const gauges = doc.createElement("div");
  gauges.className = "gauges";
  gauges.textContent =
    `head pitch ${view.head.pitch}° roll ${view.head.roll}° yaw ${view.head.yaw}° · ` +
    `arms left ${view.arms.left}° right ${view.arms.right}°`;

  const expression = doc.createElement("div");
  expression.className = "expression";
  expression.textContent = view.expression;

  const speech = doc.createElement("ul");
  speech.className = "speech-tail";
  for (const line of view.speechTail) {
    const item = doc.createElement("li");
    item.textContent = line;
    speech.appendChild(item);
  }

  const badge = doc.createElement("span");
  badge.className = view.recording ? "recording on" : "recording off";
  badge.textContent = view.recording
    ? `recording (${view.photoCount} photos)`
    : `idle (${view.photoCount} photos)`;

  container.append(swatch, gauges, expression, speech, badge);
}

export function renderPlan(container: HTMLElement, plan: PlanDocument): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  const byId = new Map(plan.subtasks.map((n) => [n.id, n]));
  for (const layer of topologicalLayers(plan)) {
    const column = doc.createElement("div");
    column.className = "plan-layer";
    for (const id of layer) {
      const node = byId.get(id)!;
      const card = doc.createElement("div");
      card.className = "plan-node";
      card.dataset.nodeId = id;
      card.textContent = `${id} (${node.agent}): ${node.description}`;
      column.appendChild(card);
    }
    container.appendChild(column);
  }
}

export function renderGate(controls: HTMLElement, open: boolean): void {
  controls.classList.toggle("gate-open", open);
  controls.classList.toggle("gate-closed", !open);
  for (const el of controls.querySelectorAll<HTMLButtonElement>("button")) {
    el.disabled = !open;
  }
  for (const el of controls.querySelectorAll<HTMLInputElement>("input, textarea, select")) {
    el.disabled = !open;
  }
}

export function renderBanner(el: HTMLElement, text: string | null): void {
  el.textContent = text ?? "";
  el.classList.toggle("visible", text !== null);
}
