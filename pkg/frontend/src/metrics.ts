// Live-experiment view: per-tick metric traces drawn as inline SVG, the
// +1% guardrail as a horizontal line over the metric3 trace, and an abort
// button that posts to the API.

import { ApiClient, ApiError } from './api.js';
import type { MetricsResponse } from './types.js';

const WIDTH = 420;
const HEIGHT = 140;
const PAD = 10;

function polyline(values: number[], min: number, max: number): string {
  const span = max - min || 1;
  return values
    .map((v, i) => {
      const x = PAD + (i / Math.max(values.length - 1, 1)) * (WIDTH - 2 * PAD);
      const y = HEIGHT - PAD - ((v - min) / span) * (HEIGHT - 2 * PAD);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(' ');
}

export function renderChart(metrics: MetricsResponse): SVGSVGElement {
  const svg = document.createElementNS('http://www.w3.org/2000/svg', 'svg');
  svg.setAttribute('viewBox', `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute('class', 'metrics-chart');
  const m1 = metrics.reports.map((r) => r.metric1);
  const m3 = metrics.reports.map((r) => r.metric3);
  const guard = metrics.guardrail_threshold;
  const all = [...m1, ...m3, guard, 0];
  const min = Math.min(...all);
  const max = Math.max(...all);
  const span = max - min || 1;

  const guardY = HEIGHT - PAD - ((guard - min) / span) * (HEIGHT - 2 * PAD);
  const guardLine = document.createElementNS(svg.namespaceURI, 'line');
  guardLine.setAttribute('x1', String(PAD));
  guardLine.setAttribute('x2', String(WIDTH - PAD));
  guardLine.setAttribute('y1', guardY.toFixed(1));
  guardLine.setAttribute('y2', guardY.toFixed(1));
  guardLine.setAttribute('class', 'guardrail');
  svg.appendChild(guardLine);

  for (const [values, cls] of [
    [m1, 'metric1'],
    [m3, 'metric3'],
  ] as Array<[number[], string]>) {
    if (!values.length) {
      continue;
    }
    const line = document.createElementNS(svg.namespaceURI, 'polyline');
    line.setAttribute('points', polyline(values, min, max));
    line.setAttribute('class', cls);
    line.setAttribute('fill', 'none');
    svg.appendChild(line);
  }
  return svg;
}

export class LiveView {
  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private onError: (message: string) => void = () => {},
    private onAborted: () => void = () => {},
  ) {}

  update(metricsById: Map<string, MetricsResponse>): void {
    const container = document.createElement('div');
    for (const [id, metrics] of metricsById) {
      const card = document.createElement('div');
      card.className = 'live-card';
      card.dataset.trialId = id;

      const header = document.createElement('div');
      const chip = document.createElement('span');
      chip.className = `phase-chip phase-${metrics.phase.toLowerCase()}`;
      chip.textContent = metrics.phase;
      header.append(`${id} `, chip);
      card.appendChild(header);

      card.appendChild(renderChart(metrics));

      if (metrics.phase === 'LIVE') {
        const button = document.createElement('button');
        button.textContent = 'abort';
        button.className = 'abort';
        button.addEventListener('click', async () => {
          button.disabled = true;
          try {
            await this.api.abortTrial(id);
            this.onAborted();
          } catch (err) {
            button.disabled = false;
            const message =
              err instanceof ApiError
                ? `${err.code}: ${err.message}`
                : String(err);
            this.onError(`abort failed (${message})`);
          }
        });
        card.appendChild(button);
      }
      container.appendChild(card);
    }
    if (!metricsById.size) {
      const empty = document.createElement('p');
      empty.textContent = 'no experiments yet';
      container.appendChild(empty);
    }
    this.root.replaceChildren(container);
  }
}
