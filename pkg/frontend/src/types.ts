/** JSON shapes exchanged with the investigation API. */

export type NodeKind = 'event' | 'unevent' | 'state' | 'process' | 'mishap';

export interface WbgNode {
  id: string;
  kind: NodeKind;
  label: string;
  fact_refs: string[];
  sim_binding: string | null;
}

export interface WbgDocument {
  version: number;
  nodes: WbgNode[];
  edges: [string, string][];
  topnodes: string[];
}

export interface Violation {
  code: string;
  message: string;
  subjects: string[];
}

export interface ValidationResult {
  ok: boolean;
  topnodes: number;
  violations: Violation[];
}

export type VerdictResult = 'pass' | 'fail' | 'unknown';

export interface Verdict {
  target: string[]; // ["edge", cause, effect] | ["node", id]
  test: 'counterfactual' | 'sufficiency';
  mode: 'simulated' | 'attested';
  result: VerdictResult;
  justification: string;
  sim_trace_ref: string | null;
}

export interface Fact {
  id: string;
  statement: string;
  source: 'witness' | 'ebb' | 'forensic' | 'document';
  confidence: 'corroborated' | 'testimony-only';
  record_refs: number[];
}

export interface Recommendation {
  id: string;
  priority: number;
  text: string;
  remedy_binding: string | null;
  validated: boolean;
}

export interface RecordRow {
  seq: number;
  t_mono_ns: number;
  t_wall_utc: string;
  channel: string;
  summary: string;
  payload_json: string;
}

export interface GapInterval {
  channel: string;
  start_t_mono_ns: number;
  end_t_mono_ns: number;
  duration_ns: number;
}

export interface UneventFinding {
  spec: string;
  satisfied: boolean;
  required: boolean;
  witnesses: number[];
}

export interface TraceEvent {
  t_s: number;
  kind: string;
  detail: string;
}

export interface SimOutcome {
  fall_occurred: boolean;
  alarm_raised: boolean;
  alarm_route: string;
  mishaps: string[];
  observables: Record<string, boolean>;
  telemetry_digest: string;
  record_count: number;
  run_id: string;
  trace: TraceEvent[];
}

export interface CaseSummary {
  case_id: string;
  log_dir: string | null;
  script_path: string | null;
  created_wall_ms: number;
  facts: Fact[];
  wbg: WbgDocument;
  verdicts: Verdict[];
  recommendations: Recommendation[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
  violations?: Violation[];
}
