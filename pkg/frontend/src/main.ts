// DOM wiring for the adjudication app. All state lives in LabelFlow /
// ConsensusReview; this file only renders and forwards events. No client-side
// persistence beyond the session token the annotator types in.

import { Client } from "./api.js";
import { ConsensusReview } from "./consensus.js";
import { LabelFlow } from "./labelFlow.js";
import {
  DECISIONS,
  DECISION_LABELS,
  SUBTYPES,
  SUBTYPE_LABELS,
  needsSubtype,
} from "./schema.js";
import type { FlowState } from "./labelFlow.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

function serverBase(): string {
  const input = $<HTMLInputElement>("server");
  return input.value.replace(/\/$/, "") || window.location.origin;
}

let flow: LabelFlow | null = null;
let review: ConsensusReview | null = null;

function renderFlow(state: FlowState): void {
  $("notice").textContent = state.notice ?? "";
  const bar = $<HTMLProgressElement>("progress-bar");
  bar.max = state.total || 1;
  bar.value = state.completed;
  $("progress-text").textContent = `${state.completed}/${state.total}`;
  $("item-panel").hidden = state.phase !== "labeling" && state.phase !== "subtype";
  $("done-panel").hidden = state.phase !== "done";
  $("subtype-panel").hidden = state.phase !== "subtype";
  $("decision-panel").hidden = state.phase !== "labeling";
  if (state.item) {
    $("claim").textContent = state.item.claim;
    $("evidence").textContent = state.item.evidence;
    $("position").textContent = `item ${state.item.position + 1} of ${state.item.total}`;
  }
}

function buildDecisionButtons(): void {
  const panel = $("decision-panel");
  DECISIONS.forEach((decision, i) => {
    const button = document.createElement("button");
    button.textContent = `${i + 1} - ${DECISION_LABELS[decision]}`;
    button.dataset.decision = decision;
    button.addEventListener("click", () => void flow?.choose(decision));
    panel.appendChild(button);
  });
  const subtypePanel = $("subtype-panel");
  SUBTYPES.forEach((subtype, i) => {
    const button = document.createElement("button");
    button.textContent = `${i + 1} - ${SUBTYPE_LABELS[subtype]}`;
    button.dataset.subtype = subtype;
    button.addEventListener("click", () => void flow?.chooseSubtype(subtype));
    subtypePanel.appendChild(button);
  });
}

function renderConsensus(): void {
  if (!review) return;
  const state = review.current();
  const blocked = $("consensus-blocked");
  blocked.hidden = !state.blocked;
  if (state.blocked) {
    blocked.textContent = state.missing.length
      ? `Streams incomplete; missing items: ${state.missing.join(", ")}`
      : "Both annotator streams must be complete before review.";
  }
  $("agreement").textContent = state.agreement
    ? `agreement raw ${state.agreement.raw.toFixed(3)} / binary ${state.agreement.binary.toFixed(3)}`
    : "";
  const queue = $("disagreement-queue");
  queue.innerHTML = "";
  for (const row of state.queue) {
    const li = document.createElement("li");
    const sides = Object.entries(row.sides)
      .map(([who, ann]) => `${who}: ${ann.decision}${ann.subtype ? "/" + ann.subtype : ""}`)
      .join("  vs  ");
    li.textContent = `${row.item_id}  ${sides}  `;
    const select = document.createElement("select");
    for (const d of DECISIONS) {
      for (const s of needsSubtype(d) ? SUBTYPES : [undefined]) {
        const opt = document.createElement("option");
        opt.value = s ? `${d}:${s}` : d;
        opt.textContent = s ? `${d} / ${s}` : d;
        select.appendChild(opt);
      }
    }
    const resolveBtn = document.createElement("button");
    resolveBtn.textContent = "resolve";
    resolveBtn.addEventListener("click", () => {
      const [decision, subtype] = select.value.split(":");
      void review
        ?.resolve(row.item_id, decision as never, subtype as never)
        .then(renderConsensus);
    });
    li.appendChild(select);
    li.appendChild(resolveBtn);
    queue.appendChild(li);
  }
  const finals = $("finals");
  finals.textContent = state.finals.length
    ? `${state.finals.length} finalized (${state.finals.filter((f) => f.source === "consensus").length} by consensus)`
    : "";
}

function start(): void {
  buildDecisionButtons();
  $("start").addEventListener("click", () => {
    const session = $<HTMLInputElement>("session").value.trim();
    if (!session) return;
    const client = new Client(serverBase());
    flow = new LabelFlow(client, session);
    flow.subscribe(renderFlow);
    $("login-panel").hidden = true;
    $("work-panel").hidden = false;
    void flow.start();
  });
  $("open-review").addEventListener("click", () => {
    const packetId = $<HTMLInputElement>("packet").value.trim();
    if (!packetId) return;
    review = new ConsensusReview(new Client(serverBase()), packetId);
    $("review-panel").hidden = false;
    void review.load().then(renderConsensus);
  });
  window.addEventListener("keydown", (event) => {
    if ((event.target as HTMLElement)?.tagName === "INPUT") return;
    const result = flow?.handleKey(event.key);
    if (result) event.preventDefault();
  });
}

document.addEventListener("DOMContentLoaded", start);
