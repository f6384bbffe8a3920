import type {
  JournalRecord,
  MetricsResponse,
  TrialSummary,
} from '../src/types.js';

export function summary(
  id: string,
  phase = 'PROPOSED',
  persona = 'optimizer',
): TrialSummary {
  return {
    id,
    phase,
    source: 'agent',
    persona_kind: persona,
    cost_units: 0,
    failure_reason: null,
  };
}

export function record(
  trialId: string,
  scoreKind: string,
  scoreValue: number,
  overrides: Partial<JournalRecord> = {},
): JournalRecord {
  return {
    trial_id: trialId,
    diff_text: 'set optimizer.learning_rate = 0.05',
    persona_kind: scoreKind === 'correlation' ? 'reward' : 'optimizer',
    score_kind: scoreKind,
    score_value: scoreValue,
    status: 'COMPLETED',
    cost_units: 100,
    timestamp: 1,
    online_metrics: null,
    offline_improved: false,
    ...overrides,
  };
}

export function metricsResponse(
  trialId: string,
  phase: string,
  metric3Values: number[] = [0.0],
): MetricsResponse {
  return {
    trial_id: trialId,
    phase,
    reports: metric3Values.map((m3, i) => ({
      metric1: 0.001,
      metric2: 0.0005,
      metric3: m3,
      confidence_halfwidth: 0.003,
      ticks_observed: i + 1,
    })),
    guardrail_threshold: 0.01,
  };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}
