// Pending-trial queue with drag-to-reorder. A drop reorders the list
// optimistically and posts the full permutation; a rejected reorder rolls
// the list back and surfaces the server's error.

import { ApiClient, ApiError } from './api.js';
import type { TrialSummary } from './types.js';

export function moveItem<T>(items: T[], from: number, to: number): T[] {
  const next = items.slice();
  const [item] = next.splice(from, 1);
  next.splice(to, 0, item);
  return next;
}

export class QueueView {
  private queue: string[] = [];
  private summaries = new Map<string, TrialSummary>();
  private dragIndex = -1;
  private pending = false;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private onError: (message: string) => void = () => {},
  ) {}

  update(queue: string[], trials: TrialSummary[]): void {
    if (this.pending) {
      return; // never clobber an in-flight optimistic reorder
    }
    this.queue = queue.slice();
    this.summaries = new Map(trials.map((t) => [t.id, t]));
    this.render();
  }

  currentOrder(): string[] {
    return this.queue.slice();
  }

  async drop(from: number, to: number): Promise<void> {
    if (from === to || from < 0 || to < 0) {
      return;
    }
    const previous = this.queue;
    this.queue = moveItem(this.queue, from, to);
    this.render();
    this.pending = true;
    try {
      const resp = await this.api.reorderQueue(this.queue);
      this.queue = resp.queue;
    } catch (err) {
      this.queue = previous;
      const message =
        err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      this.onError(`reorder rejected, rolled back (${message})`);
    } finally {
      this.pending = false;
      this.render();
    }
  }

  private render(): void {
    const list = document.createElement('ol');
    list.className = 'queue';
    this.queue.forEach((id, index) => {
      const item = document.createElement('li');
      const summary = this.summaries.get(id);
      item.textContent = summary
        ? `${id} (${summary.persona_kind}, ${summary.source})`
        : id;
      item.dataset.trialId = id;
      item.draggable = true;
      item.addEventListener('dragstart', () => {
        this.dragIndex = index;
      });
      item.addEventListener('dragover', (e) => e.preventDefault());
      item.addEventListener('drop', (e) => {
        e.preventDefault();
        void this.drop(this.dragIndex, index);
      });
      list.appendChild(item);
    });
    if (!this.queue.length) {
      const empty = document.createElement('p');
      empty.textContent = 'queue is empty';
      this.root.replaceChildren(empty);
      return;
    }
    this.root.replaceChildren(list);
  }
}
