import { describe, expect, it } from "vitest";

import { EventStream, SocketLike } from "../src/socket.js";
import { ServiceEvent } from "../src/types.js";

class FakeSocket implements SocketLike {
  onmessage: ((ev: { data: string }) => void) | null = null;
  onclose: (() => void) | null = null;
  onopen: (() => void) | null = null;
  closedByClient = false;

  open(): void {
    this.onopen?.();
  }

  emit(event: ServiceEvent): void {
    this.onmessage?.({ data: JSON.stringify(event) });
  }

  drop(): void {
    this.onclose?.();
  }

  close(): void {
    this.closedByClient = true;
  }
}

function scoreEvent(seq: number): ServiceEvent {
  return {
    type: "score",
    seq,
    stroke_id: `s${seq}`,
    timestamp: seq,
    score: 0.2,
    raw_distance: 0.1,
    is_anomaly: false,
    threshold_used: 0.5,
    points: {},
    label: null,
  };
}

describe("event stream", () => {
  it("delivers parsed events and tracks staleness across reconnects", () => {
    const sockets: FakeSocket[] = [];
    const events: ServiceEvent[] = [];
    const staleFlags: boolean[] = [];
    const timers: Array<() => void> = [];

    new EventStream(
      () => {
        const s = new FakeSocket();
        sockets.push(s);
        return s;
      },
      {
        onEvent: (e) => events.push(e),
        onStale: (s) => staleFlags.push(s),
      },
      (fn) => timers.push(fn),
    );

    sockets[0].open();
    sockets[0].emit(scoreEvent(1));
    sockets[0].emit(scoreEvent(2));
    expect(events.map((e) => e.seq)).toEqual([1, 2]);
    expect(staleFlags).toEqual([false]);

    sockets[0].drop(); // connection lost
    expect(staleFlags).toEqual([false, true]);
    expect(timers).toHaveLength(1);

    timers[0](); // reconnect timer fires
    expect(sockets).toHaveLength(2);
    sockets[1].open();
    expect(staleFlags).toEqual([false, true, false]);
    sockets[1].emit(scoreEvent(3));
    expect(events.map((e) => e.seq)).toEqual([1, 2, 3]);
  });

  it("close() stops reconnecting", () => {
    const sockets: FakeSocket[] = [];
    const timers: Array<() => void> = [];
    const stream = new EventStream(
      () => {
        const s = new FakeSocket();
        sockets.push(s);
        return s;
      },
      { onEvent: () => {}, onStale: () => {} },
      (fn) => timers.push(fn),
    );
    stream.close();
    sockets[0].drop();
    expect(timers).toHaveLength(0);
    expect(sockets[0].closedByClient).toBe(true);
  });
});
