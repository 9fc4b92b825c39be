// Remaining-time display synced to the server's status reports. The local
// clock only interpolates between syncs, so skew never accumulates past one
// polling interval.

export interface StatusReport {
  state: "open" | "closed";
  remaining_s: number | null;
}

export type CountdownDisplay =
  | { kind: "open-ended" }
  | { kind: "running"; seconds: number }
  | { kind: "closed" }
  | { kind: "stale"; seconds: number | null };

export function formatDisplay(d: CountdownDisplay): string {
  switch (d.kind) {
    case "open-ended": return "open";
    case "closed": return "closed";
    case "running": return formatMMSS(d.seconds);
    case "stale": return d.seconds === null ? "open?" : `${formatMMSS(d.seconds)}?`;
  }
}

export function formatMMSS(totalSeconds: number): string {
  const s = Math.max(0, totalSeconds);
  const m = Math.floor(s / 60);
  return `${m}:${String(s % 60).padStart(2, "0")}`;
}

interface Sync {
  remainingMs: number | null;
  closed: boolean;
  atLocalMs: number;
}

export class Countdown {
  private sync: Sync | null = null;
  private stale = false;

  constructor(private now: () => number = () => Date.now()) {}

  observe(report: StatusReport): void {
    this.stale = false;
    this.sync = {
      remainingMs: report.remaining_s === null ? null : report.remaining_s * 1000,
      closed: report.state === "closed",
      atLocalMs: this.now(),
    };
  }

  markStale(): void {
    this.stale = true;
  }

  remainingMs(): number | null {
    if (!this.sync || this.sync.remainingMs === null) return null;
    return this.sync.remainingMs - (this.now() - this.sync.atLocalMs);
  }

  closed(): boolean {
    if (!this.sync) return false;
    if (this.sync.closed) return true;
    const rem = this.remainingMs();
    return rem !== null && rem <= 0;
  }

  display(): CountdownDisplay {
    if (!this.sync) return { kind: "stale", seconds: null };
    const rem = this.remainingMs();
    const seconds = rem === null ? null : Math.max(0, Math.round(rem / 1000));
    if (this.stale) return { kind: "stale", seconds };
    if (this.closed()) return { kind: "closed" };
    if (rem === null) return { kind: "open-ended" };
    return { kind: "running", seconds: seconds as number };
  }
}

export interface TickerHandlers {
  onTick: (d: CountdownDisplay) => void;
  onClosed: () => void;
  fetchStatus: () => Promise<StatusReport>;
}

// Renders 4x a second; re-syncs with the server every pollMs, backing off
// (x2 up to 8x) while fetches fail and marking the shown time as stale.
export function startTicker(cd: Countdown, h: TickerHandlers,
                            pollMs = 2000): () => void {
  let stopped = false;
  let closedFired = false;
  let backoff = 1;

  const render = () => {
    if (stopped) return;
    h.onTick(cd.display());
    if (cd.closed() && !closedFired) {
      closedFired = true;
      h.onClosed();
    }
  };
  const renderHandle = setInterval(render, 250);

  let pollHandle: ReturnType<typeof setTimeout>;
  const poll = async () => {
    if (stopped) return;
    try {
      cd.observe(await h.fetchStatus());
      backoff = 1;
    } catch {
      cd.markStale();
      backoff = Math.min(backoff * 2, 8);
    }
    render();
    pollHandle = setTimeout(poll, pollMs * backoff);
  };
  pollHandle = setTimeout(poll, 0);

  return () => {
    stopped = true;
    clearInterval(renderHandle);
    clearTimeout(pollHandle);
  };
}
