// Shapes mirrored from the HTTP API responses.

export interface TrialSummary {
  id: string;
  phase: string;
  source: string;
  persona_kind: string;
  cost_units: number;
  failure_reason: string | null;
}

export interface TrialsResponse {
  trials: TrialSummary[];
  queue: string[];
}

export interface PhaseChange {
  from: string;
  to: string;
  tick: number;
  reason?: string;
}

export interface DiffOpJson {
  op: string;
  path: string;
  value?: unknown;
}

export interface TrialDetail {
  id: string;
  phase: string;
  manifest: {
    diff: DiffOpJson[];
    source: string;
    persona_kind: string;
    offline_score: Record<string, unknown>;
    explanation?: string;
  };
  history: PhaseChange[];
  cost_units: number;
  failure_reason: string | null;
  last_report: MetricsReport | null;
}

export interface MetricsReport {
  metric1: number;
  metric2: number;
  metric3: number;
  confidence_halfwidth: number;
  ticks_observed: number;
}

export interface MetricsResponse {
  trial_id: string;
  phase: string;
  reports: MetricsReport[];
  guardrail_threshold: number;
}

export interface JournalRecord {
  trial_id: string;
  diff_text: string;
  persona_kind: string;
  score_kind: string;
  score_value: number | 'inf';
  status: string;
  cost_units: number;
  timestamp: number;
  online_metrics: Record<string, number> | null;
  offline_improved: boolean;
}

export interface JournalResponse {
  records: JournalRecord[];
}
