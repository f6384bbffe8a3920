// Browser entry point: reads the API base/token from the URL query
// (?api=...&token=...) and starts the 2s polling dashboard.

import { ApiClient } from './api.js';
import { Dashboard } from './dashboard.js';

function mount(): void {
  const params = new URLSearchParams(window.location.search);
  const api = new ApiClient(
    params.get('api') ?? '',
    params.get('token') ?? '',
  );
  const el = (id: string): HTMLElement => {
    const node = document.getElementById(id);
    if (!node) {
      throw new Error(`missing #${id}`);
    }
    return node;
  };
  const dashboard = new Dashboard(api, {
    queue: el('queue'),
    journal: el('journal'),
    live: el('live'),
    detail: el('detail'),
    steering: el('steering'),
    status: el('status'),
  });
  el('journal').addEventListener('click', (e) => {
    const row = (e.target as HTMLElement).closest('tr[data-trial-id]');
    if (row) {
      dashboard.select((row as HTMLElement).dataset.trialId ?? null);
      void dashboard.poller.refresh();
    }
  });
  dashboard.poller.start();
}

document.addEventListener('DOMContentLoaded', mount);
