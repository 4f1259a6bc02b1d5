// Polling loop for the live monitor, plus the queue that serializes user
// actions behind in-flight mutations.
export const DEFAULT_POLL_MS = 2000;
// One status request in flight at a time: if a tick is still running when
// the interval fires again, that interval is skipped. A failed tick marks
// the view stale and the loop keeps going, so the display resumes by
// itself once the server answers again.
export class Poller {
    constructor(tick, intervalMs = DEFAULT_POLL_MS, onStale) {
        this.tick = tick;
        this.intervalMs = intervalMs;
        this.onStale = onStale;
        this.timer = null;
        this.inFlight = false;
        this.stale = false;
    }
    get running() {
        return this.timer !== null;
    }
    start() {
        if (this.timer !== null)
            return;
        this.timer = setInterval(() => void this.pollOnce(), this.intervalMs);
        void this.pollOnce();
    }
    stop() {
        if (this.timer !== null) {
            clearInterval(this.timer);
            this.timer = null;
        }
    }
    async pollOnce() {
        if (this.inFlight)
            return;
        this.inFlight = true;
        try {
            await this.tick();
            this.setStale(false);
        }
        catch {
            this.setStale(true);
        }
        finally {
            this.inFlight = false;
        }
    }
    setStale(value) {
        if (this.stale === value)
            return;
        this.stale = value;
        this.onStale?.(value);
    }
}
// Create and close are mutations; firing them concurrently from double
// clicks would interleave at the server. Everything the user triggers runs
// through here, each action starting only after the previous one settled.
export class ActionQueue {
    constructor() {
        this.chain = Promise.resolve();
    }
    run(action) {
        const next = this.chain.then(action, action);
        this.chain = next.catch(() => undefined);
        return next;
    }
}
