/**
 * Frame stream client: wraps the gateway's /ws/frames socket, keeps only
 * the latest frame (the render loop never queues stale frames), surfaces
 * lifecycle events, and reconnects with a visible status.
 */

import { parseStreamMessage, isWireFrame, StreamEvent, WireFrame } from "./protocol.js";

export type StreamStatus = "connecting" | "connected" | "disconnected";

export interface WebSocketLike {
  // handler params typed `any` so a DOM WebSocket satisfies this shape
  onopen: ((ev?: any) => void) | null;
  onclose: ((ev?: any) => void) | null;
  onerror: ((ev?: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => WebSocketLike;

export interface StreamCallbacks {
  onStatus?: (status: StreamStatus) => void;
  onEvent?: (event: StreamEvent) => void;
  onParseError?: (error: Error) => void;
}

export class FrameStreamClient {
  latest: WireFrame | null = null;
  framesSeen = 0;
  status: StreamStatus = "disconnected";

  private socket: WebSocketLike | null = null;
  private stopped = false;
  private reconnectDelayMs: number;

  constructor(
    private readonly url: string,
    private readonly factory: SocketFactory,
    private readonly callbacks: StreamCallbacks = {},
    private readonly baseReconnectDelayMs = 500,
    private readonly schedule: (fn: () => void, ms: number) => void = (fn, ms) =>
      void setTimeout(fn, ms),
  ) {
    this.reconnectDelayMs = baseReconnectDelayMs;
  }

  connect(): void {
    this.stopped = false;
    this.setStatus("connecting");
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.reconnectDelayMs = this.baseReconnectDelayMs;
      this.setStatus("connected");
    };
    socket.onmessage = (ev: { data: string }) => this.handleMessage(ev.data);
    socket.onclose = () => this.handleDrop();
    socket.onerror = () => {
      /* close always follows */
    };
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
    this.setStatus("disconnected");
  }

  private handleMessage(raw: string): void {
    let message;
    try {
      message = parseStreamMessage(raw);
    } catch (err) {
      this.callbacks.onParseError?.(err as Error);
      return;
    }
    if (isWireFrame(message)) {
      this.latest = message;
      this.framesSeen += 1;
    } else {
      this.callbacks.onEvent?.(message);
    }
  }

  private handleDrop(): void {
    if (this.stopped) return;
    this.setStatus("disconnected");
    const delay = this.reconnectDelayMs;
    this.reconnectDelayMs = Math.min(delay * 2, 10_000);
    this.schedule(() => {
      if (!this.stopped) this.connect();
    }, delay);
  }

  private setStatus(status: StreamStatus): void {
    this.status = status;
    this.callbacks.onStatus?.(status);
  }
}
