// Polling loop for the live monitor, plus the queue that serializes user
// actions behind in-flight mutations.

export const DEFAULT_POLL_MS = 2000;

// One status request in flight at a time: if a tick is still running when
// the interval fires again, that interval is skipped. A failed tick marks
// the view stale and the loop keeps going, so the display resumes by
// itself once the server answers again.
export class Poller {
  private timer: ReturnType<typeof setInterval> | null = null;
  private inFlight = false;
  stale = false;

  constructor(
    private readonly tick: () => Promise<void>,
    readonly intervalMs: number = DEFAULT_POLL_MS,
    private readonly onStale?: (stale: boolean) => void,
  ) {}

  get running(): boolean {
    return this.timer !== null;
  }

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => void this.pollOnce(), this.intervalMs);
    void this.pollOnce();
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async pollOnce(): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      await this.tick();
      this.setStale(false);
    } catch {
      this.setStale(true);
    } finally {
      this.inFlight = false;
    }
  }

  private setStale(value: boolean): void {
    if (this.stale === value) return;
    this.stale = value;
    this.onStale?.(value);
  }
}

// Create and close are mutations; firing them concurrently from double
// clicks would interleave at the server. Everything the user triggers runs
// through here, each action starting only after the previous one settled.
export class ActionQueue {
  private chain: Promise<unknown> = Promise.resolve();

  run<T>(action: () => Promise<T>): Promise<T> {
    const next = this.chain.then(action, action);
    this.chain = next.catch(() => undefined);
    return next;
  }
}
