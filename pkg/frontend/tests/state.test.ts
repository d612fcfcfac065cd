import { describe, expect, it } from "vitest";

import {
  SteeringState,
  parseContextInput,
  placeholderLabel,
  validateEditContext,
} from "../src/state.js";
import type { SessionSnapshot } from "../src/types.js";

const WHITELIST = new Set(["NP", "VP", "S"]);

function activeSnapshot(): SessionSnapshot {
  return {
    session_id: "s1",
    depth: 1,
    status: "active",
    beam: [
      { index: 0, context: ["<NP>", "<VP>"], score: -0.5, finished: false, failed: false },
      { index: 1, context: ["a", "b"], score: -1.0, finished: true, failed: false },
    ],
  };
}

describe("placeholderLabel", () => {
  it("extracts labels from placeholders and rejects tokens", () => {
    expect(placeholderLabel("<NP>")).toBe("NP");
    expect(placeholderLabel("word")).toBeNull();
    expect(placeholderLabel("<T>")).toBe("T");
  });
});

describe("parseContextInput", () => {
  it("splits on whitespace and drops empties", () => {
    expect(parseContextInput("  does <NP> <VP> ?  ")).toEqual([
      "does",
      "<NP>",
      "<VP>",
      "?",
    ]);
    expect(parseContextInput("   ")).toEqual([]);
  });
});

describe("validateEditContext", () => {
  it("accepts whitelisted placeholders and plain tokens", () => {
    expect(validateEditContext(["does", "<NP>", "?"], WHITELIST)).toBeNull();
  });
  it("rejects unknown labels and empty edits", () => {
    expect(validateEditContext(["<ZZZ>"], WHITELIST)).toMatch(/ZZZ/);
    expect(validateEditContext([], WHITELIST)).toMatch(/empty/);
  });
});

describe("SteeringState", () => {
  it("stages edits only on live candidates of an active session", () => {
    const state = new SteeringState(WHITELIST);
    expect(state.stageEdit(0, ["x"])).toMatch(/not active/);
    state.applySnapshot(activeSnapshot());
    expect(state.stageEdit(0, ["does", "<NP>", "?"])).toBeNull();
    expect(state.stageEdit(1, ["x"])).toMatch(/not editable/);
    expect(state.stageEdit(9, ["x"])).toMatch(/no beam candidate/);
    expect(state.stageEdit(0, ["<ZZZ>"])).toMatch(/ZZZ/);
    expect(state.takeEdits()).toEqual([
      { index: 0, context: ["does", "<NP>", "?"] },
    ]);
  });

  it("clears staged edits on new snapshots and on cancel", () => {
    const state = new SteeringState(WHITELIST);
    state.applySnapshot(activeSnapshot());
    state.stageEdit(0, ["does", "<NP>", "?"]);
    state.clearEdit(0);
    expect(state.takeEdits()).toEqual([]);
    state.stageEdit(0, ["does", "<NP>", "?"]);
    state.applySnapshot(activeSnapshot());
    expect(state.takeEdits()).toEqual([]);
  });

  it("tracks busy state and remembers the previous beam", () => {
    const state = new SteeringState(WHITELIST);
    const first = activeSnapshot();
    state.applySnapshot(first);
    state.beginRequest();
    expect(state.canStep).toBe(false);
    const second = { ...activeSnapshot(), depth: 2 };
    state.applySnapshot(second);
    expect(state.previousBeam).toEqual(first.beam);
    expect(state.canStep).toBe(true);
  });

  it("cannot step a finished session", () => {
    const state = new SteeringState(WHITELIST);
    state.applySnapshot({ ...activeSnapshot(), status: "finished" });
    expect(state.canStep).toBe(false);
  });
});
