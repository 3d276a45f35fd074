/**
 * ConsolePanel - renders the view model into a host element.
 *
 * Layout, top to bottom:
 * - title bar with connection dot, retry countdown and gap badge
 * - scene strip (phase-tagged pills, current scene highlighted)
 * - cue table with state badges, pending spinners and inline errors
 * - confirm bar when a destructive command is staged
 * - device table and the ignored/undeliverable ticker
 *
 * Rendering is a full rebuild per store change. The tables are tiny
 * (tens of rows), so diffing would buy nothing.
 */

import { ConsoleSession } from './session.js';
import { ConsoleStore, ConsoleViewModel, CueRowVM } from './store.js';

export class ConsolePanel {
    private root: HTMLElement;
    private session: ConsoleSession;
    private store: ConsoleStore;
    private unsubscribe: () => void;
    private countdown: number | undefined;

    constructor(root: HTMLElement, session: ConsoleSession, store: ConsoleStore) {
        this.root = root;
        this.session = session;
        this.store = store;
        this.unsubscribe = store.subscribe(() => this.render());
        // keep the retry countdown moving even when nothing else changes
        this.countdown = setInterval(() => {
            if (this.store.viewModel().connection.status === 'retrying') this.render();
        }, 250);
        this.root.addEventListener('click', (ev) => this.onClick(ev));
        this.render();
    }

    dispose(): void {
        this.unsubscribe();
        clearInterval(this.countdown);
    }

    private onClick(ev: MouseEvent): void {
        const el = (ev.target as HTMLElement).closest('[data-act]') as HTMLElement | null;
        if (!el) return;
        const cue = el.dataset.cue ?? '';
        switch (el.dataset.act) {
            case 'select':
                this.store.select(cue);
                break;
            case 'fire':
                void this.session.fire(cue);
                break;
            case 'skip':
                this.session.skip(cue);
                break;
            case 'jump':
                this.session.jump(el.dataset.scene ?? '');
                break;
            case 'hold':
                void this.session.hold();
                break;
            case 'resume':
                void this.session.resume();
                break;
            case 'confirm':
                void this.session.confirmStaged();
                break;
            case 'cancel':
                this.session.cancelStaged();
                break;
        }
    }

    private render(): void {
        const vm = this.store.viewModel();
        this.root.innerHTML = [
            this.topbar(vm),
            this.sceneStrip(vm),
            this.cueTable(vm),
            this.confirmBar(vm),
            this.devicePanel(vm),
            this.ticker(vm),
        ].join('');
    }

    private topbar(vm: ConsoleViewModel): string {
        const c = vm.connection;
        const dot = c.status === 'live' ? 'live' : 'dead';
        const retry = c.retryInMs === null ? '' :
            `<span class="retry">retry in ${(c.retryInMs / 1000).toFixed(1)}s (attempt ${c.attempt})</span>`;
        const gap = c.gapBadge ? '<span class="badge gap">stream gap</span>' : '';
        const hold = vm.held ?
            '<span class="badge hold">HELD</span><button data-act="resume">resume</button>' :
            '<button data-act="hold">hold</button>';
        const err = c.lastError ?? vm.globalError;
        return `<div class="topbar">
            <span class="dot ${dot}"></span>
            <h1>${esc(vm.title || 'connecting')}</h1>
            <span class="status">${c.status}</span>${retry}${gap}
            ${vm.ended ? '<span class="badge done">show ended</span>' : hold}
            ${err ? `<span class="banner">${esc(err)}</span>` : ''}
        </div>`;
    }

    private sceneStrip(vm: ConsoleViewModel): string {
        const pills = vm.scenes.map((s) =>
            `<span class="pill ${s.current ? 'current' : ''}" data-act="jump" data-scene="${esc(s.id)}">
                ${esc(s.id)}<small>${esc(s.phase)}</small>
            </span>`).join('');
        return `<div class="strip">${pills}</div>`;
    }

    private cueRow(cue: CueRowVM): string {
        const cls = ['cue', cue.state, cue.selected ? 'selected' : ''].join(' ');
        const pending = cue.pendingCmd ? `<span class="spin">${cue.pendingCmd}…</span>` : '';
        const media = cue.mediaPending.length ?
            `<span class="media">waiting: ${esc(cue.mediaPending.map((g) => g.join(',')).join(' | '))}</span>` : '';
        const error = cue.error ? `<span class="cue-err">${esc(cue.error)}</span>` : '';
        return `<tr class="${cls}" data-act="select" data-cue="${esc(cue.id)}">
            <td>${esc(cue.id)}</td>
            <td><span class="badge st-${cue.state}">${cue.state}</span>${pending}${error}</td>
            <td>${esc(cue.trigger)}${cue.blocking ? ' <small>blocking</small>' : ''}</td>
            <td>${cue.cause ? `cause ${esc(cue.cause)}` : ''}${media}</td>
            <td>
                <button data-act="fire" data-cue="${esc(cue.id)}">fire</button>
                <button data-act="skip" data-cue="${esc(cue.id)}">skip</button>
            </td>
        </tr>`;
    }

    private cueTable(vm: ConsoleViewModel): string {
        const bodies = vm.scenes.map((s) => `
            <tbody class="${s.current ? 'current' : 'other'}">
                <tr class="scene-head"><th colspan="5">${esc(s.id)} <small>${esc(s.phase)}</small></th></tr>
                ${s.cues.map((c) => this.cueRow(c)).join('')}
            </tbody>`).join('');
        return `<table class="cues">${bodies}</table>`;
    }

    private confirmBar(vm: ConsoleViewModel): string {
        if (!vm.confirm) return '';
        return `<div class="confirm">
            ${vm.confirm.kind} <b>${esc(vm.confirm.target)}</b>?
            <button data-act="confirm">yes</button>
            <button data-act="cancel">no</button>
        </div>`;
    }

    private devicePanel(vm: ConsoleViewModel): string {
        if (vm.devices.length === 0) return '<div class="devices empty">no devices connected</div>';
        const rows = vm.devices.map((d) => `<tr class="${d.connected ? (d.degraded ? 'degraded' : 'ok') : 'gone'}">
            <td>${esc(d.device_id)}</td><td>${esc(d.role)}</td>
            <td>${d.connected ? (d.degraded ? 'degraded' : 'up') : 'down'}</td>
            <td>${d.clock_offset_ms}ms ±${d.offset_confidence_ms}</td>
            <td>${(d.heartbeat_age_ms / 1000).toFixed(1)}s ago</td>
        </tr>`).join('');
        return `<table class="devices">
            <tr><th>device</th><th>role</th><th>link</th><th>clock</th><th>heartbeat</th></tr>${rows}
        </table>`;
    }

    private ticker(vm: ConsoleViewModel): string {
        if (vm.ticker.length === 0) return '';
        const items = vm.ticker.map((t) =>
            `<li class="${t.kind}"><small>${t.at}ms</small> ${esc(t.text)}</li>`).join('');
        return `<ul class="ticker">${items}</ul>`;
    }
}

function esc(s: string): string {
    return s.replace(/[&<>"']/g, (ch) => (
        { '&': '&amp;', '<': '&lt;', '>': '&gt;', '"': '&quot;', "'": '&#39;' }[ch] as string
    ));
}
