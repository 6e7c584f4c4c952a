/**
 * Round-trip measurement for response-time reconciliation: the server logs
 * response time as its receive time minus RTT/2, next to the raw client
 * timestamp, so clock skew between laptop and gateway cancels out.
 */

export class ClockSync {
  private samples: number[] = [];

  constructor(private readonly keep = 9) {}

  record(rttMs: number): void {
    this.samples.push(rttMs);
    if (this.samples.length > this.keep) this.samples.shift();
  }

  /** Median of recent round trips; 0 until a measurement exists. */
  rttMs(): number {
    if (this.samples.length === 0) return 0;
    const sorted = [...this.samples].sort((a, b) => a - b);
    return sorted[Math.floor(sorted.length / 2)];
  }

  /** Fields every response POST carries. */
  responseTimestamps(nowMs: number): { client_t_ms: number; rtt_ms: number } {
    return { client_t_ms: Math.round(nowMs), rtt_ms: Math.round(this.rttMs()) };
  }

  async measure(ping: () => Promise<void>, nowMs: () => number = () => performance.now()): Promise<number> {
    const start = nowMs();
    await ping();
    const rtt = nowMs() - start;
    this.record(rtt);
    return rtt;
  }
}
