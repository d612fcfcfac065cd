import { describe, expect, it } from "vitest";

import { induceTree, toBracketed } from "../src/tree.js";
import type { TraceStep } from "../src/types.js";

function step(
  depth: number,
  context: string[] | null,
  infilling: string[],
): TraceStep {
  return {
    depth,
    context,
    infilling,
    delta_f: 0,
    delta: 0,
    reward: 0,
    parent_index: 0,
    edited: false,
  };
}

describe("induceTree", () => {
  it("replays a clean trace into a nested tree", () => {
    const trace = [
      step(0, ["<T>"], ["<c>", "<S>"]),
      step(1, ["<S>"], ["<c>", "<NP>", "<VP>"]),
      step(2, ["<NP>", "<VP>"], ["<c>", "the", "dog", "<c>", "sleeps"]),
    ];
    expect(toBracketed(induceTree(trace))).toBe(
      "(<T> (S (NP the dog) (VP sleeps)))",
    );
  });

  it("resynchronizes from the recorded context after an edit", () => {
    // depth-1 context was manually replaced by a two-placeholder sequence,
    // so the replayed frontier (one <S>) disagrees with the two groups.
    const trace = [
      step(0, ["<T>"], ["<c>", "<S>"]),
      step(1, ["does", "<NP>", "<VP>", "?"], [
        "<c>",
        "the",
        "dog",
        "<c>",
        "sleeps",
      ]),
    ];
    expect(toBracketed(induceTree(trace))).toBe(
      "(<T> does (NP the dog) (VP sleeps) ?)",
    );
  });

  it("keeps dissolved constituents empty", () => {
    const trace = [
      step(0, ["<T>"], ["<c>", "a", "<S>"]),
      step(1, ["a", "<S>"], ["<c>"]),
    ];
    expect(toBracketed(induceTree(trace))).toBe("(<T> a (S))");
  });
});
