// Steering form: persona selector plus free text, posted to the API.

import { ApiClient, ApiError } from './api.js';

const PERSONAS = ['optimizer', 'architecture', 'reward'];

export class SteeringForm {
  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private onStatus: (message: string) => void = () => {},
  ) {
    this.render();
  }

  private render(): void {
    const form = document.createElement('form');
    const select = document.createElement('select');
    select.name = 'persona';
    for (const kind of PERSONAS) {
      const option = document.createElement('option');
      option.value = kind;
      option.textContent = kind;
      select.appendChild(option);
    }
    const input = document.createElement('input');
    input.name = 'text';
    input.placeholder = 'steering instruction';
    const button = document.createElement('button');
    button.type = 'submit';
    button.textContent = 'steer';

    form.addEventListener('submit', async (e) => {
      e.preventDefault();
      try {
        const resp = await this.api.addSteering(select.value, input.value);
        this.onStatus(`steering queued (${resp.queued} pending)`);
        input.value = '';
      } catch (err) {
        const message =
          err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
        this.onStatus(`steering rejected (${message})`);
      }
    });
    form.append(select, input, button);
    this.root.replaceChildren(form);
  }
}
