// 2-second polling loop. The backend is tick-driven, so polling is
// lossless; a manual refresh() runs the same fetch cycle immediately.

export class Poller {
  private timer: ReturnType<typeof setInterval> | null = null;
  private running = false;

  constructor(
    private fetchCycle: () => Promise<void>,
    private intervalMs = 2000,
    private onError: (message: string) => void = () => {},
  ) {}

  start(): void {
    if (this.timer) {
      return;
    }
    this.timer = setInterval(() => void this.refresh(), this.intervalMs);
    void this.refresh();
  }

  stop(): void {
    if (this.timer) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async refresh(): Promise<void> {
    if (this.running) {
      return; // skip overlapping cycles on slow responses
    }
    this.running = true;
    try {
      await this.fetchCycle();
    } catch (err) {
      this.onError(String(err));
    } finally {
      this.running = false;
    }
  }
}
