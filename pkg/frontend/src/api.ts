// Thin typed client over the orchestrator HTTP API. Every state change in
// the dashboard flows through one of these calls; nothing mutates locally
// except as an optimistic preview that rolls back on rejection.

import type {
  JournalResponse,
  MetricsResponse,
  TrialDetail,
  TrialsResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl = '',
    private token = '',
  ) {}

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const headers: Record<string, string> = {
      ...(init.headers as Record<string, string> | undefined),
    };
    if (this.token) {
      headers['Authorization'] = `Bearer ${this.token}`;
    }
    if (init.body) {
      headers['Content-Type'] = 'application/json';
    }
    let resp: Response;
    try {
      resp = await fetch(this.baseUrl + path, { ...init, headers });
    } catch (err) {
      throw new ApiError('unreachable', String(err), 0);
    }
    let body: unknown = null;
    try {
      body = await resp.json();
    } catch {
      // non-JSON bodies fall through to the generic error below
    }
    if (!resp.ok) {
      const e = (body ?? {}) as { code?: string; message?: string };
      throw new ApiError(
        e.code ?? String(resp.status),
        e.message ?? resp.statusText,
        resp.status,
      );
    }
    return body as T;
  }

  getTrials(): Promise<TrialsResponse> {
    return this.request('/trials');
  }

  getTrial(id: string): Promise<TrialDetail> {
    return this.request(`/trials/${id}`);
  }

  getJournal(): Promise<JournalResponse> {
    return this.request('/journal');
  }

  getMetrics(id: string): Promise<MetricsResponse> {
    return this.request(`/experiments/${id}/metrics`);
  }

  submitTrial(manifest: object): Promise<{ trial_id: string; phase: string }> {
    return this.request('/trials', {
      method: 'POST',
      body: JSON.stringify(manifest),
    });
  }

  abortTrial(id: string): Promise<{ id: string; phase: string }> {
    return this.request(`/trials/${id}/abort`, { method: 'POST' });
  }

  reorderQueue(order: string[]): Promise<{ queue: string[] }> {
    return this.request('/queue/reorder', {
      method: 'POST',
      body: JSON.stringify({ order }),
    });
  }

  addSteering(personaKind: string, text: string): Promise<{ queued: number }> {
    return this.request('/steering', {
      method: 'POST',
      body: JSON.stringify({ persona_kind: personaKind, text }),
    });
  }
}
