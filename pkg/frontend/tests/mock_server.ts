/**
 * Scripted stand-in for the show server, implementing the Transport surface
 * the console consumes. It keeps an authoritative StateSummary, a run log of
 * serialized records, and one live stream subscriber, and it imitates the
 * real /cmd endpoint shallowly: commands mutate the state and append records.
 *
 * Scripting knobs:
 * - autoFlush=false queues appended records so a test can deliver stream
 *   messages one at a time with flushNext()
 * - dropStream() kills the live stream like a lost socket
 * - firstAvailable simulates a retention floor, forcing a gap on reconnect
 * - streamRefused makes openStream fail, for retry and polling tests
 */

import { CmdResponse, StreamHandle, StreamSink, Transport } from '../src/transport.js';
import { CueLifecycle, CueSummary, DeviceRow, LogRecord, StateSummary } from '../src/types.js';

export function demoState(): StateSummary {
  return {
    title: 'Echo House',
    scene_id: 'lobby',
    held: false,
    ended: false,
    logical_now: 0,
    last_seq: 0,
    scenes: [
      {
        id: 'lobby',
        phase: 'onboarding',
        current: true,
        cues: [
          { id: 'greet', state: 'armed', blocking: false, trigger: 'ManualTrigger', pending: [] },
          { id: 'brief', state: 'idle', blocking: true, trigger: 'AutoAfterTrigger', pending: [] },
        ],
      },
      {
        id: 'floor',
        phase: 'main',
        current: false,
        cues: [
          { id: 'walk', state: 'idle', blocking: false, trigger: 'ColliderTrigger', pending: [] },
          { id: 'wrap', state: 'idle', blocking: false, trigger: 'OperatorTrigger', pending: [] },
        ],
      },
    ],
  };
}

export class MockShowServer implements Transport {
  state: StateSummary = demoState();
  devices: DeviceRow[] = [];
  lines: string[] = [];
  autoFlush = true;
  firstAvailable = 0;
  streamRefused = false;
  /** While true, GET /state rejects, as a down server would. */
  failState = false;
  /** While true, GET /state responses stall until releaseStateResponses(). */
  holdStateResponses = false;
  /** Cues the next resume releases, imitating fires deferred by a hold. */
  deferredOnResume: Array<{ cue: string; to: CueLifecycle }> = [];

  private sink: StreamSink | null = null;
  private queued: Array<{ id: number; line: string }> = [];
  private calls = new Map<string, number>();
  private stateWaiters: Array<() => void> = [];
  private clock = 1000;

  callCount(path: string): number {
    return this.calls.get(path) ?? 0;
  }

  private count(path: string): void {
    this.calls.set(path, (this.calls.get(path) ?? 0) + 1);
  }

  private at(): number {
    this.clock += 10;
    return this.clock;
  }

  cue(id: string): CueSummary {
    for (const scene of this.state.scenes) {
      for (const cue of scene.cues) {
        if (cue.id === id) return cue;
      }
    }
    throw new Error(`mock: no cue ${id}`);
  }

  // -- Transport ------------------------------------------------------------

  async getJson(path: string): Promise<any> {
    const clean = path.split('?')[0];
    this.count(clean);
    if (clean === '/state') {
      if (this.failState) throw new Error('mock: state unavailable');
      if (this.holdStateResponses) {
        await new Promise<void>((resolve) => this.stateWaiters.push(resolve));
      }
      return structuredClone(this.state);
    }
    if (clean === '/devices') return { devices: structuredClone(this.devices) };
    throw new Error(`mock: no route for GET ${path}`);
  }

  releaseStateResponses(): void {
    this.holdStateResponses = false;
    for (const resolve of this.stateWaiters.splice(0)) resolve();
  }

  async postJson(path: string, body: any): Promise<CmdResponse> {
    const clean = path.split('?')[0];
    this.count(clean);
    if (clean !== '/cmd') throw new Error(`mock: no route for POST ${path}`);
    return this.handleCmd(body);
  }

  openStream(path: string, sink: StreamSink): StreamHandle {
    this.count('/stream');
    if (this.streamRefused) {
      queueMicrotask(() => sink.onDown(new Error('mock: stream refused')));
      return { close() {} };
    }
    const since = Number(new URL('http://mock' + path).searchParams.get('since') ?? '0');
    this.sink = sink;
    sink.onOpen();
    for (let i = Math.max(since, this.firstAvailable); i < this.lines.length; i++) {
      if (this.sink !== sink) break; // dropped mid-replay
      sink.onFrame({ id: i, data: this.lines[i] });
    }
    return {
      close: () => {
        if (this.sink === sink) this.sink = null;
      },
    };
  }

  // -- stream scripting -------------------------------------------------------

  /** Append a record to the log; deliver it unless autoFlush is off. */
  append(rec: LogRecord): void {
    const id = this.lines.length;
    const line = JSON.stringify(rec);
    this.lines.push(line);
    if (this.autoFlush) this.deliver(id, line);
    else this.queued.push({ id, line });
  }

  /** Deliver exactly one queued stream message. */
  flushNext(): void {
    const item = this.queued.shift();
    if (!item) throw new Error('mock: nothing queued to flush');
    this.deliver(item.id, item.line);
  }

  get queuedCount(): number {
    return this.queued.length;
  }

  private deliver(id: number, line: string): void {
    this.sink?.onFrame({ id, data: line });
  }

  /** Kill the live stream the way a dropped socket would. */
  dropStream(message = 'mock: connection lost'): void {
    const sink = this.sink;
    this.sink = null;
    sink?.onDown(new Error(message));
  }

  get streaming(): boolean {
    return this.sink !== null;
  }

  /** Move a cue and log the transition; silent when no stream is attached. */
  scriptTransition(cueId: string, to: CueLifecycle, cause = 'script'): void {
    const cue = this.cue(cueId);
    const from = cue.state;
    cue.state = to;
    this.append({ rec: 'transition', cue: cueId, from, to, at: this.at(), cause });
  }

  // -- a shallow imitation of the real command endpoint ------------------------

  private handleCmd(body: any): CmdResponse {
    const fail = (status: number, error: string, message: string): CmdResponse => ({
      status,
      body: { error, message },
    });
    switch (body?.cmd) {
      case 'fire': {
        let cue: CueSummary;
        try {
          cue = this.cue(String(body.cue_id));
        } catch {
          return fail(404, 'E_UNKNOWN_CUE', `no cue ${body.cue_id}`);
        }
        if (cue.state === 'completed' || cue.state === 'skipped') {
          return fail(409, 'E_ALREADY_COMPLETED', `cue ${cue.id} already ${cue.state}`);
        }
        const from = cue.state;
        cue.state = 'running';
        this.append({ rec: 'transition', cue: cue.id, from, to: 'running', at: this.at(), cause: 'op:fire' });
        break;
      }
      case 'skip': {
        let cue: CueSummary;
        try {
          cue = this.cue(String(body.cue_id));
        } catch {
          return fail(404, 'E_UNKNOWN_CUE', `no cue ${body.cue_id}`);
        }
        if (cue.state === 'completed' || cue.state === 'skipped') {
          return fail(409, 'E_ALREADY_COMPLETED', `cue ${cue.id} already ${cue.state}`);
        }
        const from = cue.state;
        cue.state = 'skipped';
        this.append({ rec: 'transition', cue: cue.id, from, to: 'skipped', at: this.at(), cause: 'op:skip' });
        break;
      }
      case 'hold': {
        this.state.held = true;
        this.append({ rec: 'hold', at: this.at(), on: true, cause: 'op:hold' });
        break;
      }
      case 'resume': {
        this.state.held = false;
        this.append({ rec: 'hold', at: this.at(), on: false, cause: 'op:resume' });
        for (const deferred of this.deferredOnResume) {
          this.scriptTransition(deferred.cue, deferred.to, 'deferred');
        }
        this.deferredOnResume = [];
        break;
      }
      case 'jump': {
        const scene = this.state.scenes.find((s) => s.id === body.scene_id);
        if (!scene) return fail(404, 'E_UNKNOWN_SCENE', `no scene ${body.scene_id}`);
        const from = this.state.scene_id;
        this.state.scene_id = scene.id;
        for (const s of this.state.scenes) s.current = s.id === scene.id;
        this.append({ rec: 'scene', at: this.at(), from_scene: from, to_scene: scene.id, cause: 'op:jump' });
        break;
      }
      default:
        return fail(400, 'E_SYNTAX', `unknown cmd ${body?.cmd}`);
    }
    return { status: 200, body: { ok: true, state: structuredClone(this.state) } };
  }
}
