// Trial detail: phase timeline, the config diff, and offline/online scores.

import type { TrialDetail } from './types.js';

export function renderDiff(detail: TrialDetail): HTMLElement {
  const pre = document.createElement('pre');
  pre.className = 'diff';
  pre.textContent = detail.manifest.diff
    .map((op) =>
      op.op === 'remove'
        ? `remove ${op.path}`
        : `set ${op.path} = ${JSON.stringify(op.value)}`,
    )
    .join('\n');
  return pre;
}

export function renderTimeline(detail: TrialDetail): HTMLElement {
  const list = document.createElement('ol');
  list.className = 'timeline';
  for (const step of detail.history) {
    const item = document.createElement('li');
    item.textContent = `tick ${step.tick}: ${step.from} -> ${step.to}`;
    if (step.reason) {
      item.textContent += ` (${step.reason})`;
    }
    list.appendChild(item);
  }
  return list;
}

export class DetailView {
  constructor(private root: HTMLElement) {}

  update(detail: TrialDetail | null): void {
    if (!detail) {
      const empty = document.createElement('p');
      empty.textContent = 'select a trial';
      this.root.replaceChildren(empty);
      return;
    }
    const title = document.createElement('h3');
    title.textContent = `${detail.id} [${detail.phase}]`;

    const meta = document.createElement('p');
    meta.textContent =
      `${detail.manifest.persona_kind} / ${detail.manifest.source}` +
      `, cost ${detail.cost_units}` +
      (detail.failure_reason ? `, reason: ${detail.failure_reason}` : '');

    const score = document.createElement('p');
    score.textContent = `offline score: ${JSON.stringify(
      detail.manifest.offline_score,
    )}`;

    const children: HTMLElement[] = [
      title,
      meta,
      renderDiff(detail),
      score,
      renderTimeline(detail),
    ];
    if (detail.last_report) {
      const online = document.createElement('p');
      const r = detail.last_report;
      online.textContent =
        `online: metric1=${r.metric1.toFixed(5)} ` +
        `metric3=${r.metric3.toFixed(5)} ` +
        `(halfwidth ${r.confidence_halfwidth.toFixed(5)})`;
      children.push(online);
    }
    this.root.replaceChildren(...children);
  }
}
