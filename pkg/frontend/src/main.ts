/** Controller: wires the API client, state, and renderer together. */

import { ApiClient, ApiError } from "./api.js";
import { SteeringState, parseContextInput } from "./state.js";
import { renderView, type Handlers } from "./render.js";
import type { SearchParams } from "./types.js";

export const DEFAULT_WHITELIST = new Set([
  "NP",
  "VP",
  "PP",
  "S",
  "SBAR",
  "ADJP",
  "ADVP",
]);

export function parseParams(raw: Record<string, string>): SearchParams {
  const params: SearchParams = {};
  if (raw.k) params.k = parseInt(raw.k, 10);
  if (raw.alpha) params.alpha = parseFloat(raw.alpha);
  if (raw.gamma) params.gamma = parseFloat(raw.gamma);
  if (raw.seed) params.seed = parseInt(raw.seed, 10);
  if (raw.template) params.template = raw.template;
  return params;
}

export class Controller {
  readonly state: SteeringState;
  private sessionId: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly container: HTMLElement,
    whitelist: ReadonlySet<string> = DEFAULT_WHITELIST,
  ) {
    this.state = new SteeringState(whitelist);
  }

  private readonly handlers: Handlers = {
    onStart: (sourceText, rawParams) => void this.start(sourceText, rawParams),
    onStep: () => void this.step(),
    onStageEdit: (index, text) => {
      const problem = this.state.stageEdit(index, parseContextInput(text));
      this.state.error = problem;
      this.render();
    },
    onCancelEdit: (index) => {
      this.state.clearEdit(index);
      this.render();
    },
  };

  render(): void {
    renderView(this.container, this.state, this.handlers);
  }

  async start(sourceText: string, rawParams: Record<string, string>): Promise<void> {
    const source = parseContextInput(sourceText);
    if (source.length === 0) {
      this.state.error = "source must not be empty";
      this.render();
      return;
    }
    this.state.source = source;
    this.state.params = parseParams(rawParams);
    this.state.beginRequest();
    this.render();
    try {
      const snap = await this.api.createSession(source, this.state.params);
      this.sessionId = snap.session_id;
      this.state.applySnapshot(snap);
    } catch (e) {
      this.state.failRequest(e instanceof ApiError ? e.message : String(e));
    }
    this.render();
  }

  async step(): Promise<void> {
    if (!this.sessionId || !this.state.canStep) return;
    const edits = this.state.takeEdits();
    this.state.beginRequest();
    this.render();
    try {
      const snap = await this.api.step(this.sessionId, edits);
      this.state.applySnapshot(snap);
    } catch (e) {
      this.state.failRequest(e instanceof ApiError ? e.message : String(e));
    }
    this.render();
  }
}

export function mount(container: HTMLElement, baseUrl: string): Controller {
  const controller = new Controller(new ApiClient(baseUrl), container);
  controller.render();
  return controller;
}
