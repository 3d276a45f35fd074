// Wire shapes served by the show server. These mirror the JSON that the
// HTTP endpoints and the event stream emit; the console adds nothing and
// renames nothing, so a field here is exactly a field on the wire.

export type CueLifecycle = 'idle' | 'armed' | 'running' | 'completed' | 'skipped';

export interface CueSummary {
  id: string;
  state: CueLifecycle;
  blocking: boolean;
  trigger: string;
  pending: string[][];
}

export interface SceneSummary {
  id: string;
  phase: string;
  current: boolean;
  cues: CueSummary[];
}

/** GET /state response body. */
export interface StateSummary {
  title: string;
  scene_id: string;
  held: boolean;
  ended: boolean;
  logical_now: number;
  last_seq: number;
  scenes: SceneSummary[];
}

/** One row of GET /devices. */
export interface DeviceRow {
  device_id: string;
  role: string;
  connected: boolean;
  degraded: boolean;
  heartbeat_age_ms: number;
  clock_offset_ms: number;
  offset_confidence_ms: number;
}

/** One line of the run log, as carried on GET /stream and GET /log. */
export interface LogRecord {
  rec: string;
  at?: number;
  cue?: string;
  from?: string;
  to?: CueLifecycle;
  on?: boolean;
  from_scene?: string;
  to_scene?: string;
  reason?: string;
  device?: string;
  kind?: string;
  cause?: unknown;
  [key: string]: unknown;
}

export type CommandKind = 'fire' | 'skip' | 'hold' | 'resume' | 'jump';

export interface CmdError {
  error: string;
  message: string;
}
