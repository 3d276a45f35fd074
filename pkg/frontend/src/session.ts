/**
 * ConsoleSession - wires a Transport to a ConsoleStore and keeps them honest.
 *
 * Connection policy:
 * - connect() fetches /state, then subscribes to /stream?since=<cursor>
 * - the cursor is the next log index we expect; every frame must carry it
 * - a frame with any other index means we missed records, so the session
 *   re-fetches /state exactly once and shows the gap badge
 * - when the stream dies the session retries with doubling backoff and
 *   polls /state once a second in the meantime, so the view stays warm
 *
 * Command policy:
 * - fire, hold and resume send immediately and mark the target pending
 * - skip and jump are destructive, so they stage a confirm step first
 * - a 2xx reply keeps the pending mark; only the stream record clears it
 * - an error reply clears the mark and pins the code to the cue row
 */

import { StreamFrame } from './sse.js';
import { StreamHandle, Transport } from './transport.js';
import { ConsoleStore } from './store.js';
import { CommandKind, StateSummary } from './types.js';
import { HOLD_KEY } from './pending.js';

export interface SessionOptions {
    /** /state poll period while the stream is down. */
    pollMs?: number;
    /** /devices refresh period while live. */
    devicePollMs?: number;
    /** First reconnect delay; doubles per attempt. */
    backoffBaseMs?: number;
    backoffCapMs?: number;
}

export class ConsoleSession {
    private cursor = 0;
    private stream: StreamHandle | null = null;
    private retryTimer: ReturnType<typeof setTimeout> | null = null;
    private pollTimer: ReturnType<typeof setInterval> | null = null;
    private deviceTimer: ReturnType<typeof setInterval> | null = null;
    private attempts = 0;
    private bootstrapped = false;
    private resyncing = false;
    private resyncNeeded = false;
    private parked: StreamFrame[] = [];
    private closed = true;

    private readonly pollMs: number;
    private readonly devicePollMs: number;
    private readonly backoffBaseMs: number;
    private readonly backoffCapMs: number;

    constructor(
        private transport: Transport,
        private store: ConsoleStore,
        opts: SessionOptions = {},
    ) {
        this.pollMs = opts.pollMs ?? 1000;
        this.devicePollMs = opts.devicePollMs ?? 2000;
        this.backoffBaseMs = opts.backoffBaseMs ?? 500;
        this.backoffCapMs = opts.backoffCapMs ?? 15000;
    }

    async connect(): Promise<void> {
        this.closed = false;
        this.store.connConnecting();
        try {
            const state = (await this.transport.getJson('/state')) as StateSummary;
            this.store.applyState(state);
            await this.refreshDevices();
        } catch (err) {
            this.onStreamDown(toError(err));
            return;
        }
        this.bootstrapped = true;
        this.openStream();
    }

    close(): void {
        this.closed = true;
        this.clearTimers();
        if (this.stream) {
            this.stream.close();
            this.stream = null;
        }
    }

    // -- commands ------------------------------------------------------------

    async fire(cueId: string): Promise<void> {
        await this.send('fire', { cue_id: cueId }, cueId);
    }

    async hold(): Promise<void> {
        await this.send('hold', {}, HOLD_KEY);
    }

    async resume(): Promise<void> {
        await this.send('resume', {}, HOLD_KEY);
    }

    /** Destructive: stages a confirm step instead of sending. */
    skip(cueId: string): void {
        this.store.stageConfirm({ kind: 'skip', target: cueId });
    }

    /** Destructive: stages a confirm step instead of sending. */
    jump(sceneId: string): void {
        this.store.stageConfirm({ kind: 'jump', target: sceneId });
    }

    async confirmStaged(): Promise<void> {
        const req = this.store.takeConfirm();
        if (!req) return;
        if (req.kind === 'jump') {
            await this.send('jump', { scene_id: req.target }, req.target);
        } else {
            await this.send(req.kind, { cue_id: req.target }, req.target);
        }
    }

    cancelStaged(): void {
        this.store.takeConfirm();
    }

    async fireSelected(): Promise<void> {
        const id = this.store.selectedCue;
        if (id) await this.fire(id);
    }

    skipSelected(): void {
        const id = this.store.selectedCue;
        if (id) this.skip(id);
    }

    private async send(kind: CommandKind, extra: Record<string, string>, key: string): Promise<void> {
        this.store.markPending(key, kind, Date.now());
        let status: number;
        let body: any;
        try {
            ({ status, body } = await this.transport.postJson('/cmd', { cmd: kind, ...extra }));
        } catch (err) {
            this.store.rejectPending(key, toError(err).message);
            return;
        }
        if (status !== 200 || body?.error) {
            this.store.rejectPending(key, String(body?.error ?? `HTTP ${status}`));
        }
        // on 200 the mark stays until the stream confirms the state change
    }

    // -- stream lifecycle ------------------------------------------------------

    private openStream(): void {
        if (this.closed) return;
        this.stream = this.transport.openStream(`/stream?since=${this.cursor}`, {
            onOpen: () => {
                this.attempts = 0;
                this.stopPolling();
                this.startDevicePolling();
                this.store.connLive();
            },
            onFrame: (frame) => this.onFrame(frame),
            onDown: (err) => this.onStreamDown(err),
        });
    }

    private onFrame(frame: StreamFrame): void {
        if (this.closed) return;
        if (frame.id !== this.cursor) {
            // Missed records: the mirror can no longer be trusted, flag one
            // authoritative re-fetch and keep applying from here.
            this.store.setGapBadge(true);
            this.resyncNeeded = true;
        }
        this.cursor = frame.id + 1;
        if (this.resyncing) {
            this.parked.push(frame);
            return;
        }
        this.applyFrame(frame);
        if (this.resyncNeeded) void this.resync();
    }

    private applyFrame(frame: StreamFrame): void {
        try {
            this.store.applyRecord(JSON.parse(frame.data));
        } catch {
            this.store.setGlobalError(`unreadable stream record at index ${frame.id}`);
        }
    }

    private async resync(): Promise<void> {
        if (this.resyncing) return;
        this.resyncing = true;
        this.resyncNeeded = false;
        try {
            const state = (await this.transport.getJson('/state')) as StateSummary;
            this.store.applyState(state);
        } catch (err) {
            this.resyncNeeded = true; // the next frame will try again
            this.store.setGlobalError(`state re-fetch failed: ${toError(err).message}`);
        } finally {
            this.resyncing = false;
            const parked = this.parked;
            this.parked = [];
            for (const frame of parked) this.applyFrame(frame);
        }
    }

    private onStreamDown(err: Error): void {
        if (this.closed) return;
        if (this.stream) {
            this.stream.close();
            this.stream = null;
        }
        this.stopDevicePolling();
        this.store.rollbackPending();
        this.attempts += 1;
        const delay = Math.min(this.backoffBaseMs * 2 ** (this.attempts - 1), this.backoffCapMs);
        this.store.connRetrying(this.attempts, Date.now() + delay, err.message);
        if (this.retryTimer !== null) clearTimeout(this.retryTimer);
        this.retryTimer = setTimeout(() => {
            this.retryTimer = null;
            if (this.closed) return;
            if (this.bootstrapped) {
                this.openStream();
            } else {
                void this.connect();
            }
        }, delay);
        if (this.bootstrapped) this.startPolling();
    }

    // -- fallback polling --------------------------------------------------------

    private startPolling(): void {
        if (this.pollTimer !== null) return;
        this.pollTimer = setInterval(() => void this.pollOnce(), this.pollMs);
    }

    private stopPolling(): void {
        if (this.pollTimer !== null) {
            clearInterval(this.pollTimer);
            this.pollTimer = null;
        }
    }

    private async pollOnce(): Promise<void> {
        try {
            this.store.applyState((await this.transport.getJson('/state')) as StateSummary);
        } catch {
            // the retry banner is already up; nothing more to say
        }
    }

    private startDevicePolling(): void {
        if (this.deviceTimer !== null) return;
        this.deviceTimer = setInterval(() => void this.refreshDevices(), this.devicePollMs);
    }

    private stopDevicePolling(): void {
        if (this.deviceTimer !== null) {
            clearInterval(this.deviceTimer);
            this.deviceTimer = null;
        }
    }

    async refreshDevices(): Promise<void> {
        try {
            const body = await this.transport.getJson('/devices');
            this.store.applyDevices(body.devices ?? []);
        } catch {
            // device table keeps its last known rows
        }
    }

    private clearTimers(): void {
        if (this.retryTimer !== null) {
            clearTimeout(this.retryTimer);
            this.retryTimer = null;
        }
        this.stopPolling();
        this.stopDevicePolling();
    }
}

function toError(err: unknown): Error {
    return err instanceof Error ? err : new Error(String(err));
}
