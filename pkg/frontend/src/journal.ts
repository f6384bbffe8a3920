// Journal table: sortable columns, defaulting to the same ordering the
// prompt renderer uses for its full_sorted context (score ascending for
// proxy losses, descending for correlations, stable on ties).

import type { JournalRecord } from './types.js';

export type SortColumn = 'score' | 'timestamp' | 'trial_id' | 'cost_units';

export function scoreValue(r: JournalRecord): number {
  return r.score_value === 'inf' ? Infinity : r.score_value;
}

export function scoreSortKey(r: JournalRecord): number {
  return r.score_kind === 'correlation' ? -scoreValue(r) : scoreValue(r);
}

/** The full_sorted context ordering: best score first, append order on
 * ties. Array.prototype.sort is stable, matching the backend's sort. */
export function fullSortedOrder(
  records: JournalRecord[],
  personaKind?: string,
): JournalRecord[] {
  const matching = personaKind
    ? records.filter((r) => r.persona_kind === personaKind)
    : records.slice();
  return matching.sort((a, b) => scoreSortKey(a) - scoreSortKey(b));
}

export function sortRecords(
  records: JournalRecord[],
  column: SortColumn,
  descending: boolean,
): JournalRecord[] {
  const sorted = records.slice().sort((a, b) => {
    switch (column) {
      case 'score':
        return scoreSortKey(a) - scoreSortKey(b);
      case 'timestamp':
        return a.timestamp - b.timestamp;
      case 'cost_units':
        return a.cost_units - b.cost_units;
      case 'trial_id':
        return a.trial_id < b.trial_id ? -1 : a.trial_id > b.trial_id ? 1 : 0;
    }
  });
  return descending ? sorted.reverse() : sorted;
}

const COLUMNS: Array<[SortColumn | null, string]> = [
  ['trial_id', 'trial'],
  [null, 'status'],
  [null, 'persona'],
  ['score', 'offline score'],
  [null, 'metric1'],
  ['cost_units', 'cost'],
  ['timestamp', 'tick'],
];

export class JournalTable {
  private records: JournalRecord[] = [];
  private column: SortColumn = 'score';
  private descending = false;

  constructor(private root: HTMLElement) {}

  update(records: JournalRecord[]): void {
    this.records = records;
    this.render();
  }

  setSort(column: SortColumn): void {
    if (this.column === column) {
      this.descending = !this.descending;
    } else {
      this.column = column;
      this.descending = false;
    }
    this.render();
  }

  /** Rows in their current display order (exposed for tests). */
  displayedIds(): string[] {
    return Array.from(this.root.querySelectorAll('tbody tr')).map(
      (tr) => (tr as HTMLElement).dataset.trialId ?? '',
    );
  }

  private render(): void {
    const rows = sortRecords(this.records, this.column, this.descending);
    const table = document.createElement('table');
    table.className = 'journal';
    const thead = document.createElement('thead');
    const head = document.createElement('tr');
    thead.appendChild(head);
    table.appendChild(thead);
    for (const [key, label] of COLUMNS) {
      const th = document.createElement('th');
      th.textContent =
        key === this.column ? `${label} ${this.descending ? '▼' : '▲'}` : label;
      if (key) {
        th.classList.add('sortable');
        th.addEventListener('click', () => this.setSort(key));
      }
      head.appendChild(th);
    }
    const body = document.createElement('tbody');
    table.appendChild(body);
    for (const r of rows) {
      const tr = document.createElement('tr');
      tr.dataset.trialId = r.trial_id;
      const metric1 = r.online_metrics
        ? (r.online_metrics['metric1'] ?? 0).toFixed(5)
        : '-';
      const cells = [
        r.trial_id,
        r.status,
        r.persona_kind,
        `${r.score_kind}=${r.score_value}`,
        metric1,
        String(r.cost_units),
        String(r.timestamp),
      ];
      for (const text of cells) {
        const td = document.createElement('td');
        td.textContent = text;
        tr.appendChild(td);
      }
      body.appendChild(tr);
    }
    this.root.replaceChildren(table);
  }
}
