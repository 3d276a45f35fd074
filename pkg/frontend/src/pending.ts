import { CommandKind } from './types.js';

export interface PendingCmd {
  key: string;
  kind: CommandKind;
  sentAt: number;
}

/**
 * Tracks commands sent to the server but not yet confirmed on the stream.
 * A key is the cue id, the scene id, or HOLD_KEY for hold and resume.
 */
export class PendingCommands {
  private inflight = new Map<string, PendingCmd>();

  /** Register a command as awaiting confirmation. */
  mark(key: string, kind: CommandKind, sentAt: number): void {
    this.inflight.set(key, { key, kind, sentAt });
  }

  /** The stream confirmed something about this key; forget the optimism. */
  confirm(key: string): PendingCmd | undefined {
    const cmd = this.inflight.get(key);
    if (cmd) this.inflight.delete(key);
    return cmd;
  }

  /** The server rejected the command outright. */
  reject(key: string): PendingCmd | undefined {
    return this.confirm(key);
  }

  get(key: string): PendingCmd | undefined {
    return this.inflight.get(key);
  }

  /** Drop every pending command, e.g. after an authoritative snapshot. */
  clear(): void {
    this.inflight.clear();
  }

  get size(): number {
    return this.inflight.size;
  }
}

export const HOLD_KEY = '#hold';
