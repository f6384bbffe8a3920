// Wires the views to one polling cycle against the API. Kept separate
// from main.ts so tests can drive it with a mocked client and fake timers.

import { ApiClient } from './api.js';
import { DetailView } from './detail.js';
import { JournalTable } from './journal.js';
import { LiveView } from './metrics.js';
import { Poller } from './poller.js';
import { QueueView } from './queue.js';
import { SteeringForm } from './steering.js';
import type { MetricsResponse } from './types.js';

export interface DashboardRoots {
  queue: HTMLElement;
  journal: HTMLElement;
  live: HTMLElement;
  detail: HTMLElement;
  steering: HTMLElement;
  status: HTMLElement;
}

const WATCHED_PHASES = new Set(['LIVE', 'COMPLETED', 'ABORTED']);

export class Dashboard {
  readonly queue: QueueView;
  readonly journal: JournalTable;
  readonly live: LiveView;
  readonly detail: DetailView;
  readonly steering: SteeringForm;
  readonly poller: Poller;
  private selected: string | null = null;

  constructor(
    private api: ApiClient,
    private roots: DashboardRoots,
    pollIntervalMs = 2000,
  ) {
    const status = (message: string) => this.showStatus(message);
    this.queue = new QueueView(roots.queue, api, status);
    this.journal = new JournalTable(roots.journal);
    this.live = new LiveView(roots.live, api, status, () =>
      void this.poller.refresh(),
    );
    this.detail = new DetailView(roots.detail);
    this.steering = new SteeringForm(roots.steering, api, status);
    this.poller = new Poller(
      () => this.fetchCycle(),
      pollIntervalMs,
      status,
    );
  }

  select(trialId: string | null): void {
    this.selected = trialId;
  }

  showStatus(message: string): void {
    this.roots.status.textContent = message;
  }

  private async fetchCycle(): Promise<void> {
    const [trials, journal] = await Promise.all([
      this.api.getTrials(),
      this.api.getJournal(),
    ]);
    this.queue.update(trials.queue, trials.trials);
    this.journal.update(journal.records);

    const watched = trials.trials.filter((t) => WATCHED_PHASES.has(t.phase));
    const metrics = new Map<string, MetricsResponse>();
    for (const t of watched) {
      metrics.set(t.id, await this.api.getMetrics(t.id));
    }
    this.live.update(metrics);

    if (this.selected) {
      this.detail.update(await this.api.getTrial(this.selected));
    }
  }
}
