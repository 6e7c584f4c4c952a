/** Thin gateway client; the console only ever talks to these endpoints. */

import { Topology } from "./protocol.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface TrialStartOptions {
  strategy: "semantic" | "positional";
  seed: number;
  participant?: string;
  load?: "none" | "arithmetic" | "visual_tracking";
  n_stimuli?: number;
  duration_ms?: number;
}

export class GatewayApi {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  wsUrl(path: string): string {
    return this.baseUrl.replace(/^http/, "ws") + path;
  }

  private async post(path: string, body: unknown): Promise<Record<string, unknown>> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload = (await resp.json()) as Record<string, unknown>;
    if (!resp.ok) {
      throw new Error(String(payload.error ?? `${path} failed (${resp.status})`));
    }
    return payload;
  }

  async topology(): Promise<Topology> {
    const resp = await this.fetchImpl(this.baseUrl + "/topology");
    return (await resp.json()) as Topology;
  }

  async healthz(): Promise<void> {
    await this.fetchImpl(this.baseUrl + "/healthz");
  }

  trigger(event: string, strategy: string): Promise<Record<string, unknown>> {
    return this.post("/trigger", { event, strategy });
  }

  startTrial(options: TrialStartOptions): Promise<Record<string, unknown>> {
    return this.post("/trial/start", options);
  }

  stopTrial(): Promise<Record<string, unknown>> {
    return this.post("/trial/stop", {});
  }

  respond(
    chosen: string,
    timestamps: { client_t_ms: number; rtt_ms: number },
  ): Promise<Record<string, unknown>> {
    return this.post("/trial/respond", { chosen, ...timestamps });
  }

  submitPath(body: {
    points: [number, number][];
    frame: string;
    timestamps?: number[];
  }): Promise<Record<string, unknown>> {
    return this.post("/path", body);
  }

  async exportSession(id: string): Promise<Record<string, unknown>> {
    const resp = await this.fetchImpl(`${this.baseUrl}/session/${id}/export`);
    return (await resp.json()) as Record<string, unknown>;
  }
}
