import { SseDecoder, StreamFrame } from './sse.js';

export interface StreamSink {
  /** Stream response arrived; frames may follow. */
  onOpen(): void;
  onFrame(frame: StreamFrame): void;
  /** Stream died for any reason other than close(). */
  onDown(err: Error): void;
}

export interface StreamHandle {
  close(): void;
}

export interface CmdResponse {
  status: number;
  body: any;
}

/**
 * Everything the console asks of the server, as one small surface.
 * Tests substitute a scripted fake; the browser build uses HttpTransport.
 */
export interface Transport {
  getJson(path: string): Promise<any>;
  postJson(path: string, body: unknown): Promise<CmdResponse>;
  openStream(path: string, sink: StreamSink): StreamHandle;
}

export class HttpTransport implements Transport {
  private base: string;

  constructor(base: string) {
    this.base = base.replace(/\/+$/, '');
  }

  async getJson(path: string): Promise<any> {
    const res = await fetch(this.base + path);
    if (!res.ok) throw new Error(`GET ${path} failed: HTTP ${res.status}`);
    return res.json();
  }

  async postJson(path: string, body: unknown): Promise<CmdResponse> {
    const res = await fetch(this.base + path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    return { status: res.status, body: await res.json() };
  }

  openStream(path: string, sink: StreamSink): StreamHandle {
    const ctl = new AbortController();
    let closed = false;

    const pump = async () => {
      const res = await fetch(this.base + path, {
        signal: ctl.signal,
        headers: { accept: 'text/event-stream' },
      });
      if (!res.ok || !res.body) throw new Error(`stream failed: HTTP ${res.status}`);
      sink.onOpen();
      const reader = res.body.getReader();
      const decoder = new SseDecoder();
      const text = new TextDecoder();
      for (;;) {
        const { done, value } = await reader.read();
        if (done) throw new Error('stream closed by server');
        for (const frame of decoder.push(text.decode(value, { stream: true }))) {
          sink.onFrame(frame);
        }
      }
    };

    pump().catch((err) => {
      if (!closed) sink.onDown(err instanceof Error ? err : new Error(String(err)));
    });

    return {
      close() {
        closed = true;
        ctl.abort();
      },
    };
  }
}
