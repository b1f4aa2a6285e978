// Server-sent-events consumer for per-session streams. The service numbers
// events gaplessly per session, so a dropped connection resumes from the
// last seen id (?since= plus Last-Event-ID) without losing or repeating
// anything. A `stopped` event ends the stream for good.

import type { StreamEvent } from './types.js';

export type ConnectionState = 'connecting' | 'open' | 'reconnecting' | 'closed';

/** Incremental parser; survives frames split across arbitrary chunk
 * boundaries. Feed it decoded text, get back completed events. */
export class SseParser {
  private buffer = '';

  feed(chunk: string): StreamEvent[] {
    this.buffer += chunk;
    const events: StreamEvent[] = [];
    let sep: number;
    while ((sep = this.buffer.indexOf('\n\n')) !== -1) {
      const frame = this.buffer.slice(0, sep);
      this.buffer = this.buffer.slice(sep + 2);
      const parsed = parseFrame(frame);
      if (parsed !== null) events.push(parsed);
    }
    return events;
  }
}

function parseFrame(frame: string): StreamEvent | null {
  let id = 0;
  let type = 'message';
  const dataLines: string[] = [];
  for (const line of frame.split('\n')) {
    if (line.startsWith('id:')) {
      id = Number(line.slice(3).trim());
    } else if (line.startsWith('event:')) {
      type = line.slice(6).trim();
    } else if (line.startsWith('data:')) {
      dataLines.push(line.slice(5).replace(/^ /, ''));
    }
    // comment lines and unknown fields are ignored, per the SSE format
  }
  if (dataLines.length === 0) return null;
  return { id, type, body: JSON.parse(dataLines.join('\n')) } as StreamEvent;
}

export interface StreamOptions {
  /** Resume after this event id (0 = from the beginning). */
  since?: number;
  /** Server-side idle timeout per connection, seconds. */
  timeoutSeconds?: number;
  /** Pause before reconnect attempts, milliseconds. */
  retryDelayMs?: number;
  onStatus?: (state: ConnectionState) => void;
}

export class EventStream {
  lastId: number;
  readonly done: Promise<void>;

  private controller: AbortController | null = null;
  private closed = false;
  private lastStatus: ConnectionState | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly sessionId: string,
    private readonly onEvent: (event: StreamEvent) => void,
    private readonly options: StreamOptions = {},
  ) {
    this.lastId = options.since ?? 0;
    this.done = this.run();
  }

  close(): void {
    this.closed = true;
    this.controller?.abort();
    this.setStatus('closed');
  }

  private setStatus(state: ConnectionState): void {
    if (state === this.lastStatus) return;
    this.lastStatus = state;
    this.options.onStatus?.(state);
  }

  private async run(): Promise<void> {
    const retryDelay = this.options.retryDelayMs ?? 500;
    const timeout = this.options.timeoutSeconds ?? 30;
    let everConnected = false;
    while (!this.closed) {
      this.setStatus(everConnected ? 'reconnecting' : 'connecting');
      try {
        const url =
          `${this.baseUrl}/sessions/${this.sessionId}/events` +
          `?since=${this.lastId}&follow=true&timeout=${timeout}`;
        this.controller = new AbortController();
        const response = await fetch(url, {
          headers: {
            Accept: 'text/event-stream',
            'Last-Event-ID': String(this.lastId),
          },
          signal: this.controller.signal,
        });
        if (!response.ok || response.body === null) {
          throw new Error(`event stream returned ${response.status}`);
        }
        this.setStatus('open');
        everConnected = true;
        const reader = response.body.getReader();
        const decoder = new TextDecoder();
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          const chunk = decoder.decode(value, { stream: true });
          for (const event of this.parser.feed(chunk)) {
            if (event.id <= this.lastId) continue;
            this.lastId = event.id;
            this.onEvent(event);
            if (event.type === 'stopped') {
              this.close();
              return;
            }
          }
        }
      } catch {
        if (this.closed) break;
      }
      // server closed the connection (idle timeout or mid-stream drop):
      // start a fresh one from the cursor
      this.parser = new SseParser();
      if (this.closed) break;
      await delay(retryDelay);
    }
    this.setStatus('closed');
  }

  private parser = new SseParser();
}

function delay(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
