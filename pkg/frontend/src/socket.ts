import { ServiceEvent } from "./types.js";

/** Minimal WebSocket surface so tests can inject a fake. */
export interface SocketLike {
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onopen: (() => void) | null;
  close(): void;
}

export interface StreamCallbacks {
  onEvent(event: ServiceEvent): void;
  onStale(stale: boolean): void;
}

/** Event-stream subscription with a stale indicator and auto-reconnect. */
export class EventStream {
  private socket: SocketLike | null = null;
  private closed = false;
  private retryMs: number;
  received = 0;

  constructor(
    private factory: () => SocketLike,
    private callbacks: StreamCallbacks,
    private schedule: (fn: () => void, ms: number) => void = (fn, ms) =>
      void setTimeout(fn, ms),
    private baseRetryMs = 500,
  ) {
    this.retryMs = baseRetryMs;
    this.connect();
  }

  private connect(): void {
    const socket = this.factory();
    this.socket = socket;
    socket.onopen = () => {
      this.retryMs = this.baseRetryMs;
      this.callbacks.onStale(false);
    };
    socket.onmessage = (ev) => {
      this.received += 1;
      this.callbacks.onEvent(JSON.parse(ev.data) as ServiceEvent);
    };
    socket.onclose = () => {
      if (this.closed) return;
      this.callbacks.onStale(true);
      this.schedule(() => this.connect(), this.retryMs);
      this.retryMs = Math.min(this.retryMs * 2, 10_000);
    };
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}
