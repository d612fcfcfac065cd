/** JSON shapes of the decoding service API. */

export interface BeamEntry {
  index: number;
  context: string[];
  score: number;
  finished: boolean;
  failed: boolean;
}

export interface TraceStep {
  depth: number;
  context: string[] | null;
  infilling: string[];
  delta_f: number;
  delta: number;
  reward: number;
  parent_index: number;
  edited: boolean;
}

export interface Hypothesis {
  tokens: string[];
  score: number;
  finished: boolean;
  failed: boolean;
  trace: TraceStep[];
}

export interface Expansion {
  parent_index: number;
  infilling: string[];
  delta_f: number;
  delta: number;
  reward: number;
}

export type SessionStatus = "active" | "finished" | "failed";

export interface SessionSnapshot {
  session_id: string;
  depth: number;
  status: SessionStatus;
  beam: BeamEntry[];
  hypotheses?: Hypothesis[];
  expansions?: Expansion[];
}

export interface HistoryEntry {
  depth: number;
  edits: Edit[];
  expansions: Expansion[];
  beam_after: BeamEntry[];
}

export interface SessionDetail extends SessionSnapshot {
  source: string[];
  history: HistoryEntry[];
  candidates: unknown[];
}

export interface Edit {
  index: number;
  context: string[];
}

export interface SearchParams {
  k?: number;
  alpha?: number;
  gamma?: number;
  d_max?: number;
  t_max?: number;
  template?: string;
  seed?: number;
}

export interface Health {
  status: string;
  model_kind: string;
  vocab_size: number;
}

export interface ErrorBody {
  error: { code: string; message: string };
}
