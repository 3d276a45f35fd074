/** One parsed frame off the event stream: the log index plus its JSON line. */
export interface StreamFrame {
  id: number;
  data: string;
}

/**
 * Incremental decoder for the server's event-stream framing. Frames are
 * blank-line separated blocks of "id: N" and "data: {...}" lines; chunks
 * may split a frame anywhere, so leftover bytes stay buffered.
 */
export class SseDecoder {
  private buf = '';

  push(chunk: string): StreamFrame[] {
    this.buf += chunk;
    const frames: StreamFrame[] = [];
    let cut: number;
    while ((cut = this.buf.indexOf('\n\n')) >= 0) {
      const block = this.buf.slice(0, cut);
      this.buf = this.buf.slice(cut + 2);
      const frame = parseBlock(block);
      if (frame) frames.push(frame);
    }
    return frames;
  }
}

function parseBlock(block: string): StreamFrame | null {
  let id = -1;
  let data = '';
  for (const line of block.split('\n')) {
    if (line.startsWith('id:')) {
      id = Number(line.slice(3).trim());
    } else if (line.startsWith('data:')) {
      data = line.slice(5).trimStart();
    }
    // lines starting with ':' are keepalive comments; nothing to do
  }
  if (!Number.isInteger(id) || id < 0 || data === '') return null;
  return { id, data };
}
