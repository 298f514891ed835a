// Long-poll event loop with at-least-once delivery from the server and
// exactly-once dispatch here: reconnects may replay events below the
// cursor, so every sequence number is dispatched at most once.

import type { ApiClient, StreamEvent } from "./api.js";

export type EventHandler = (event: StreamEvent) => void;

export class EventLoop {
  private api: ApiClient;
  private handlers: EventHandler[] = [];
  private seen = new Set<number>();
  cursor = 0;
  running = false;

  constructor(api: ApiClient) {
    this.api = api;
  }

  onEvent(handler: EventHandler): void {
    this.handlers.push(handler);
  }

  // Apply a batch: returns the events that had not been seen before.
  // The cursor advances over duplicates too, so polling moves on after a
  // reconnect replay instead of re-requesting the same range.
  apply(events: StreamEvent[]): StreamEvent[] {
    const fresh: StreamEvent[] = [];
    for (const event of events) {
      if (event.seq > this.cursor) this.cursor = event.seq;
      if (this.seen.has(event.seq)) continue;
      this.seen.add(event.seq);
      fresh.push(event);
      for (const handler of this.handlers) handler(event);
    }
    return fresh;
  }

  // One non-blocking poll; used by tests and as the loop body.
  async pollOnce(wait = false, timeoutSeconds = 25): Promise<StreamEvent[]> {
    const out = await this.api.events(this.cursor, timeoutSeconds, wait);
    return this.apply(out.events);
  }

  // Pretend the connection dropped: the next poll re-requests from an
  // older cursor and relies on dedup.
  simulateDisconnect(rewindTo = 0): void {
    this.cursor = rewindTo;
  }

  start(): void {
    if (this.running) return;
    this.running = true;
    const loop = async () => {
      while (this.running) {
        try {
          await this.pollOnce(true);
        } catch {
          await new Promise((resolve) => setTimeout(resolve, 2000));
        }
      }
    };
    void loop();
  }

  stop(): void {
    this.running = false;
  }
}
