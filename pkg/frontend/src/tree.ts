/** Display-side reconstruction of the parse tree implied by a decode
 * trace.  Purely cosmetic: decoding truth always lives in the service
 * payload; this only turns a trace into something drawable. */

import { placeholderLabel } from "./state.js";
import type { TraceStep } from "./types.js";

export const SEP = "<c>";

export interface TreeNode {
  label: string;
  children: (TreeNode | string)[];
}

function splitGroups(infilling: string[]): string[][] {
  const groups: string[][] = [];
  for (const tok of infilling) {
    if (tok === SEP) groups.push([]);
    else groups[groups.length - 1]?.push(tok);
  }
  return groups;
}

function frontierFromContext(
  root: TreeNode,
  context: string[],
): TreeNode[] {
  root.children = [];
  const frontier: TreeNode[] = [];
  for (const item of context) {
    const label = placeholderLabel(item);
    if (label !== null) {
      const node: TreeNode = { label, children: [] };
      root.children.push(node);
      frontier.push(node);
    } else {
      root.children.push(item);
    }
  }
  return frontier;
}

/** Rebuilds the tree by replaying the trace's expansions.  A manual edit
 * can make the replayed frontier disagree with the recorded context; the
 * reconstruction then restarts from the recorded context, so everything
 * above the edit point is flattened under the root. */
export function induceTree(trace: TraceStep[]): TreeNode {
  const root: TreeNode = { label: "<T>", children: [] };
  let frontier: TreeNode[] = [root];
  for (const step of trace) {
    const groups = splitGroups(step.infilling);
    if (groups.length !== frontier.length) {
      if (!step.context) break;
      frontier = frontierFromContext(root, step.context);
      if (groups.length !== frontier.length) break;
    }
    const next: TreeNode[] = [];
    frontier.forEach((node, i) => {
      for (const tok of groups[i]) {
        const label = placeholderLabel(tok);
        if (label !== null) {
          const child: TreeNode = { label, children: [] };
          node.children.push(child);
          next.push(child);
        } else {
          node.children.push(tok);
        }
      }
    });
    frontier = next;
  }
  return root;
}

export function toBracketed(node: TreeNode): string {
  const parts = node.children.map((c) =>
    typeof c === "string" ? c : toBracketed(c),
  );
  return `(${[node.label, ...parts].join(" ")})`;
}
