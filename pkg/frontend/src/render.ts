/** DOM construction for the steering view.  Every displayed decoding
 * value is copied from the latest service snapshot held in the state;
 * nothing is computed client-side except number formatting and the
 * display tree. */

import { SteeringState, placeholderLabel } from "./state.js";
import { induceTree, toBracketed } from "./tree.js";
import type { BeamEntry, Expansion, Hypothesis } from "./types.js";

export interface Handlers {
  onStart(sourceText: string, paramsText: Record<string, string>): void;
  onStep(): void;
  onStageEdit(index: number, text: string): void;
  onCancelEdit(index: number): void;
}

export const fmt = (x: number): string => x.toFixed(4);

function el(
  doc: Document,
  tag: string,
  className: string,
  text?: string,
): HTMLElement {
  const node = doc.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function chipRow(doc: Document, items: string[]): HTMLElement {
  const row = el(doc, "div", "chips");
  for (const item of items) {
    const label = placeholderLabel(item);
    const chip = el(
      doc,
      "span",
      label === null ? "chip token" : "chip placeholder",
      item,
    );
    if (label !== null) chip.setAttribute("data-label", label);
    row.appendChild(chip);
  }
  return row;
}

function paramPanel(
  doc: Document,
  state: SteeringState,
  handlers: Handlers,
): HTMLElement {
  const panel = el(doc, "form", "param-panel");
  const sourceBox = el(doc, "input", "source-input") as HTMLInputElement;
  sourceBox.name = "source";
  sourceBox.value = state.source.join(" ");
  panel.appendChild(sourceBox);
  for (const name of ["k", "alpha", "gamma", "template", "seed"]) {
    const field = el(doc, "input", `param param-${name}`) as HTMLInputElement;
    field.name = name;
    const value = (state.params as Record<string, unknown>)[name];
    field.value = value === undefined ? "" : String(value);
    const wrap = el(doc, "label", "param-label", name);
    wrap.appendChild(field);
    panel.appendChild(wrap);
  }
  const start = el(doc, "button", "start", "start") as HTMLButtonElement;
  start.type = "button";
  start.disabled = state.busy;
  start.addEventListener("click", () => {
    const params: Record<string, string> = {};
    panel.querySelectorAll("input.param").forEach((n) => {
      const input = n as HTMLInputElement;
      if (input.value.trim()) params[input.name] = input.value.trim();
    });
    handlers.onStart(sourceBox.value, params);
  });
  panel.appendChild(start);
  return panel;
}

function timeline(doc: Document, depth: number): HTMLElement {
  const bar = el(doc, "ol", "depth-timeline");
  for (let d = 0; d <= depth; d++) {
    bar.appendChild(
      el(doc, "li", d === depth ? "depth current" : "depth", String(d)),
    );
  }
  return bar;
}

function beamCard(
  doc: Document,
  state: SteeringState,
  entry: BeamEntry,
  handlers: Handlers,
): HTMLElement {
  const flags = entry.failed ? "failed" : entry.finished ? "finished" : "live";
  const card = el(doc, "article", `beam-card ${flags}`);
  card.setAttribute("data-index", String(entry.index));
  const head = el(doc, "header", "card-head");
  head.appendChild(el(doc, "span", "card-index", `#${entry.index}`));
  head.appendChild(el(doc, "span", "card-score", fmt(entry.score)));
  head.appendChild(el(doc, "span", "card-flag", flags));
  card.appendChild(head);
  card.appendChild(chipRow(doc, entry.context));

  const staged = state.stagedEdits.get(entry.index);
  if (staged) {
    const mark = el(doc, "div", "staged-edit");
    mark.appendChild(el(doc, "span", "staged-tag", "staged:"));
    mark.appendChild(chipRow(doc, staged));
    const cancel = el(doc, "button", "cancel-edit", "cancel") as HTMLButtonElement;
    cancel.type = "button";
    cancel.addEventListener("click", () => handlers.onCancelEdit(entry.index));
    mark.appendChild(cancel);
    card.appendChild(mark);
  }
  if (flags === "live" && state.snapshot?.status === "active") {
    const editor = el(doc, "div", "edit-row");
    const box = el(doc, "input", "edit-input") as HTMLInputElement;
    box.value = staged ? staged.join(" ") : entry.context.join(" ");
    const stage = el(doc, "button", "stage-edit", "edit") as HTMLButtonElement;
    stage.type = "button";
    stage.addEventListener("click", () =>
      handlers.onStageEdit(entry.index, box.value),
    );
    editor.appendChild(box);
    editor.appendChild(stage);
    card.appendChild(editor);
  }
  return card;
}

function expansionTable(
  doc: Document,
  state: SteeringState,
  rows: Expansion[],
): HTMLElement {
  const table = el(doc, "table", "expansions");
  const head = el(doc, "tr", "expansion-head");
  for (const col of ["parent", "infilling", "δ_s", "δ_f", "δ", "reward"]) {
    head.appendChild(el(doc, "th", "col", col));
  }
  table.appendChild(head);
  for (const row of rows) {
    const tr = el(doc, "tr", "expansion");
    const parentScore = state.previousBeam[row.parent_index]?.score;
    tr.appendChild(el(doc, "td", "parent", `#${row.parent_index}`));
    tr.appendChild(el(doc, "td", "infilling", row.infilling.join(" ")));
    tr.appendChild(
      el(doc, "td", "delta-s", parentScore === undefined ? "—" : fmt(parentScore)),
    );
    tr.appendChild(el(doc, "td", "delta-f", fmt(row.delta_f)));
    tr.appendChild(el(doc, "td", "delta", fmt(row.delta)));
    tr.appendChild(el(doc, "td", "reward", fmt(row.reward)));
    table.appendChild(tr);
  }
  return table;
}

function hypothesisPanel(doc: Document, hyps: Hypothesis[]): HTMLElement {
  const panel = el(doc, "section", "hypotheses");
  hyps.forEach((h, rank) => {
    const item = el(doc, "article", "hypothesis");
    item.setAttribute("data-rank", String(rank));
    item.appendChild(el(doc, "span", "hyp-tokens", h.tokens.join(" ")));
    item.appendChild(el(doc, "span", "hyp-score", fmt(h.score)));
    item.appendChild(
      el(doc, "pre", "hyp-tree", toBracketed(induceTree(h.trace))),
    );
    panel.appendChild(item);
  });
  return panel;
}

/** Rebuilds the whole view from the state; idempotent given equal state. */
export function renderView(
  container: HTMLElement,
  state: SteeringState,
  handlers: Handlers,
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  container.appendChild(paramPanel(doc, state, handlers));

  const status = el(doc, "div", "status-bar");
  const snap = state.snapshot;
  status.appendChild(
    el(doc, "span", "status", snap ? snap.status : "no session"),
  );
  if (state.error) status.appendChild(el(doc, "span", "error", state.error));
  container.appendChild(status);

  if (!snap) return;
  container.appendChild(timeline(doc, snap.depth));

  const beam = el(doc, "section", "beam");
  for (const entry of snap.beam) {
    beam.appendChild(beamCard(doc, state, entry, handlers));
  }
  container.appendChild(beam);

  if (snap.expansions?.length) {
    container.appendChild(expansionTable(doc, state, snap.expansions));
  }

  const step = el(doc, "button", "step", "step") as HTMLButtonElement;
  step.type = "button";
  step.disabled = !state.canStep;
  step.addEventListener("click", () => handlers.onStep());
  container.appendChild(step);

  if (snap.hypotheses) {
    container.appendChild(hypothesisPanel(doc, snap.hypotheses));
  }
}
