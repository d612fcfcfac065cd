/** Client-side session state: last service snapshot, staged edits, and
 * request-in-flight bookkeeping.  All decoding facts come from service
 * responses; this module only stages user input and mirrors snapshots. */

import type { Edit, SearchParams, SessionSnapshot } from "./types.js";

const PLACEHOLDER = /^<(.+)>$/;

/** Returns the placeholder label of a context item, or null for a token. */
export function placeholderLabel(item: string): string | null {
  const m = PLACEHOLDER.exec(item);
  return m ? m[1] : null;
}

/** Splits a whitespace-separated edit string into context items. */
export function parseContextInput(text: string): string[] {
  return text.split(/\s+/).filter((t) => t.length > 0);
}

export function validateEditContext(
  items: string[],
  whitelist: ReadonlySet<string>,
): string | null {
  if (items.length === 0) return "edited context must not be empty";
  for (const item of items) {
    const label = placeholderLabel(item);
    if (label !== null && !whitelist.has(label)) {
      return `unknown placeholder label: ${label}`;
    }
  }
  return null;
}

export class SteeringState {
  snapshot: SessionSnapshot | null = null;
  /** Beam from the snapshot before the latest step; expansion rows'
   * parent_index points into this. */
  previousBeam: SessionSnapshot["beam"] = [];
  source: string[] = [];
  params: SearchParams = {};
  stagedEdits = new Map<number, string[]>();
  busy = false;
  error: string | null = null;

  constructor(public readonly whitelist: ReadonlySet<string>) {}

  get canStep(): boolean {
    return !this.busy && this.snapshot?.status === "active";
  }

  beginRequest(): void {
    this.busy = true;
    this.error = null;
  }

  applySnapshot(snap: SessionSnapshot): void {
    this.previousBeam = this.snapshot?.beam ?? [];
    this.snapshot = snap;
    this.stagedEdits.clear();
    this.busy = false;
  }

  failRequest(message: string): void {
    this.busy = false;
    this.error = message;
  }

  /** Stages an edit for one live beam candidate; returns an error message
   * or null on success. */
  stageEdit(index: number, items: string[]): string | null {
    const snap = this.snapshot;
    if (!snap || snap.status !== "active") return "session is not active";
    const entry = snap.beam[index];
    if (!entry) return `no beam candidate at index ${index}`;
    if (entry.finished || entry.failed) return "candidate is not editable";
    const problem = validateEditContext(items, this.whitelist);
    if (problem) return problem;
    this.stagedEdits.set(index, items);
    return null;
  }

  clearEdit(index: number): void {
    this.stagedEdits.delete(index);
  }

  takeEdits(): Edit[] {
    return [...this.stagedEdits.entries()]
      .sort(([a], [b]) => a - b)
      .map(([index, context]) => ({ index, context }));
  }
}
