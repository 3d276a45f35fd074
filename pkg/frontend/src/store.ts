/**
 * ConsoleStore - the single source the UI renders from.
 *
 * What it holds:
 * - a mirror of the server's /state summary, updated by snapshots and by
 *   stream records (transition, scene, hold, show_end)
 * - the /devices table
 * - an event ticker of recent ignored and undeliverable records
 * - optimistic pending commands and per-cue inline errors
 * - connection status, retry countdown, and the stream-gap badge
 *
 * Nothing in here is authoritative. Snapshots replace the mirror wholesale
 * and drop all optimism; stream records move it forward. The view model is
 * a pure projection, so rendering twice changes nothing.
 */

import {
  CommandKind,
  CueLifecycle,
  CueSummary,
  DeviceRow,
  LogRecord,
  StateSummary,
} from './types.js';
import { HOLD_KEY, PendingCommands } from './pending.js';

export type ConnStatus = 'idle' | 'connecting' | 'live' | 'retrying';

export interface ConnectionVM {
  status: ConnStatus;
  attempt: number;
  retryInMs: number | null;
  gapBadge: boolean;
  lastError: string | null;
}

export interface CueRowVM {
  id: string;
  state: CueLifecycle;
  blocking: boolean;
  trigger: string;
  mediaPending: string[][];
  pendingCmd: CommandKind | null;
  error: string | null;
  cause: string;
  selected: boolean;
}

export interface SceneVM {
  id: string;
  phase: string;
  current: boolean;
  cues: CueRowVM[];
}

export interface TickerItem {
  at: number;
  kind: 'ignored' | 'undeliverable';
  text: string;
}

export interface ConfirmRequest {
  kind: CommandKind;
  target: string;
}

export interface ConsoleViewModel {
  title: string;
  connection: ConnectionVM;
  sceneId: string;
  held: boolean;
  ended: boolean;
  holdPending: CommandKind | null;
  scenes: SceneVM[];
  devices: DeviceRow[];
  ticker: TickerItem[];
  confirm: ConfirmRequest | null;
  selectedCue: string | null;
  globalError: string | null;
}

const TICKER_LIMIT = 20;

export class ConsoleStore {
  private summary: StateSummary | null = null;
  private devices: DeviceRow[] = [];
  private ticker: TickerItem[] = [];
  private pending = new PendingCommands();
  private cueErrors = new Map<string, string>();
  private causes = new Map<string, string>();
  private selected: string | null = null;
  private confirm: ConfirmRequest | null = null;
  private globalError: string | null = null;
  private conn: { status: ConnStatus; attempt: number; retryAt: number | null; gap: boolean; err: string | null } = {
    status: 'idle',
    attempt: 0,
    retryAt: null,
    gap: false,
    err: null,
  };
  private listeners = new Set<() => void>();

  subscribe(fn: () => void): () => void {
    this.listeners.add(fn);
    return () => {
      this.listeners.delete(fn);
    };
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  // -- snapshots and records ------------------------------------------------

  /** Replace the mirror with an authoritative snapshot. Optimism resets. */
  applyState(summary: StateSummary): void {
    this.summary = summary;
    this.pending.clear();
    if (this.selected && !this.findCue(this.selected)) this.selected = null;
    this.emit();
  }

  applyDevices(devices: DeviceRow[]): void {
    this.devices = devices;
    this.emit();
  }

  /** Move the mirror forward by one stream record. */
  applyRecord(rec: LogRecord): void {
    const s = this.summary;
    switch (rec.rec) {
      case 'transition': {
        const cue = s ? this.findCue(String(rec.cue)) : null;
        if (cue && rec.to) {
          cue.state = rec.to;
          if (cue.state === 'completed' || cue.state === 'skipped') cue.pending = [];
        }
        if (rec.cue) {
          this.causes.set(String(rec.cue), rec.cause === undefined ? '' : String(rec.cause));
          this.pending.confirm(String(rec.cue));
          this.cueErrors.delete(String(rec.cue));
        }
        break;
      }
      case 'scene': {
        if (s && rec.to_scene) {
          s.scene_id = rec.to_scene;
          for (const scene of s.scenes) scene.current = scene.id === rec.to_scene;
          this.pending.confirm(rec.to_scene);
        }
        break;
      }
      case 'hold': {
        if (s) s.held = rec.on === true;
        this.pending.confirm(HOLD_KEY);
        break;
      }
      case 'show_end': {
        if (s) s.ended = true;
        break;
      }
      case 'command': {
        if (s && rec.kind === 'start_media' && rec.cue && Array.isArray(rec.targets)) {
          const cue = this.findCue(String(rec.cue));
          if (cue) cue.pending = [rec.targets.map(String)];
        }
        break;
      }
      case 'timeout': {
        const cue = s ? this.findCue(String(rec.cue)) : null;
        if (cue) cue.pending = [];
        this.pushTicker(rec, 'ignored', `timeout: cue ${rec.cue} gave up waiting`);
        break;
      }
      case 'ignored': {
        this.pushTicker(rec, 'ignored', String(rec.reason ?? 'ignored'));
        break;
      }
      case 'undeliverable': {
        this.pushTicker(rec, 'undeliverable', `${rec.kind ?? 'command'} to ${rec.device ?? '?'} undeliverable`);
        break;
      }
      default:
        break; // meta, event, dispatch and friends carry no view change
    }
    this.emit();
  }

  private pushTicker(rec: LogRecord, kind: TickerItem['kind'], text: string): void {
    this.ticker.unshift({ at: rec.at ?? 0, kind, text });
    if (this.ticker.length > TICKER_LIMIT) this.ticker.length = TICKER_LIMIT;
  }

  private findCue(id: string): CueSummary | null {
    if (!this.summary) return null;
    for (const scene of this.summary.scenes) {
      for (const cue of scene.cues) {
        if (cue.id === id) return cue;
      }
    }
    return null;
  }

  // -- optimism and errors ----------------------------------------------------

  markPending(key: string, kind: CommandKind, sentAt: number): void {
    this.pending.mark(key, kind, sentAt);
    this.cueErrors.delete(key);
    this.emit();
  }

  rejectPending(key: string, error: string): void {
    this.pending.reject(key);
    if (key === HOLD_KEY) {
      this.globalError = error;
    } else {
      this.cueErrors.set(key, error);
    }
    this.emit();
  }

  /** Stream went away: optimism can no longer be confirmed, roll it back. */
  rollbackPending(): void {
    this.pending.clear();
    this.emit();
  }

  setGlobalError(message: string | null): void {
    this.globalError = message;
    this.emit();
  }

  // -- selection and confirm staging -----------------------------------------

  private cueOrder(): string[] {
    if (!this.summary) return [];
    return this.summary.scenes.flatMap((scene) => scene.cues.map((cue) => cue.id));
  }

  select(cueId: string | null): void {
    this.selected = cueId;
    this.emit();
  }

  moveSelection(delta: number): void {
    const order = this.cueOrder();
    if (order.length === 0) return;
    const at = this.selected ? order.indexOf(this.selected) : -1;
    const next = at < 0 ? (delta > 0 ? 0 : order.length - 1) : Math.min(order.length - 1, Math.max(0, at + delta));
    this.selected = order[next];
    this.emit();
  }

  get selectedCue(): string | null {
    return this.selected;
  }

  stageConfirm(req: ConfirmRequest): void {
    this.confirm = req;
    this.emit();
  }

  takeConfirm(): ConfirmRequest | null {
    const req = this.confirm;
    this.confirm = null;
    if (req) this.emit();
    return req;
  }

  get staged(): ConfirmRequest | null {
    return this.confirm;
  }

  // -- connection -------------------------------------------------------------

  connConnecting(): void {
    this.conn.status = 'connecting';
    this.conn.err = null;
    this.emit();
  }

  connLive(): void {
    this.conn = { ...this.conn, status: 'live', attempt: 0, retryAt: null, err: null };
    this.emit();
  }

  connRetrying(attempt: number, retryAt: number, error: string): void {
    this.conn = { ...this.conn, status: 'retrying', attempt, retryAt, err: error };
    this.emit();
  }

  setGapBadge(on: boolean): void {
    this.conn.gap = on;
    this.emit();
  }

  get gapBadge(): boolean {
    return this.conn.gap;
  }

  // -- projection ---------------------------------------------------------------

  viewModel(now: number = Date.now()): ConsoleViewModel {
    const s = this.summary;
    const scenes: SceneVM[] = (s?.scenes ?? []).map((scene) => ({
      id: scene.id,
      phase: scene.phase,
      current: scene.current,
      cues: scene.cues.map((cue) => ({
        id: cue.id,
        state: cue.state,
        blocking: cue.blocking,
        trigger: cue.trigger,
        mediaPending: cue.pending.map((group) => [...group]),
        pendingCmd: this.pending.get(cue.id)?.kind ?? null,
        error: this.cueErrors.get(cue.id) ?? null,
        cause: this.causes.get(cue.id) ?? '',
        selected: cue.id === this.selected,
      })),
    }));
    return {
      title: s?.title ?? '',
      connection: {
        status: this.conn.status,
        attempt: this.conn.attempt,
        retryInMs: this.conn.retryAt === null ? null : Math.max(0, this.conn.retryAt - now),
        gapBadge: this.conn.gap,
        lastError: this.conn.err,
      },
      sceneId: s?.scene_id ?? '',
      held: s?.held ?? false,
      ended: s?.ended ?? false,
      holdPending: this.pending.get(HOLD_KEY)?.kind ?? null,
      scenes,
      devices: this.devices.map((d) => ({ ...d })),
      ticker: this.ticker.map((t) => ({ ...t })),
      confirm: this.confirm,
      selectedCue: this.selected,
      globalError: this.globalError,
    };
  }
}
