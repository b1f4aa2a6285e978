// End-to-end: drives the real HTTP service the way the browser app does,
// through ApiClient + UiStore + EventStream + renderers. Spawns
// `rescuegraph serve` on a free port with the bundled sample corpus.

import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import { spawn, type ChildProcess } from 'node:child_process';
import { createServer } from 'node:net';
import { fileURLToPath } from 'node:url';
import path from 'node:path';

import { ApiClient } from '../src/client.js';
import { EventStream } from '../src/events.js';
import { UiStore } from '../src/store.js';
import { renderPrompt, renderSession, renderTabs } from '../src/render.js';
import type { StreamEvent } from '../src/types.js';

const CORPUS = path.resolve(
  path.dirname(fileURLToPath(import.meta.url)),
  '../../src/rescuegraph/data/corpus.json',
);

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.listen(0, '127.0.0.1', () => {
      const port = (probe.address() as { port: number }).port;
      probe.close(() => resolve(port));
    });
    probe.on('error', reject);
  });
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function until<T>(probe: () => T | null | undefined | false, what: string, timeoutMs = 10_000): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const value = probe();
    if (value) return value;
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await sleep(25);
  }
}

let service: ChildProcess;
let base: string;
let stderr = '';

beforeAll(async () => {
  const port = await freePort();
  base = `http://127.0.0.1:${port}`;
  service = spawn('rescuegraph', ['serve', CORPUS, '--port', String(port)], {
    stdio: ['ignore', 'ignore', 'pipe'],
  });
  service.stderr?.on('data', (chunk: Buffer) => {
    stderr += chunk.toString();
  });
  const died = new Promise<never>((_, reject) => {
    service.once('exit', (code) => reject(new Error(`service exited ${code}: ${stderr}`)));
  });
  const deadline = Date.now() + 20_000;
  for (;;) {
    try {
      const response = await Promise.race([fetch(`${base}/graph/stats`), died]);
      if (response.ok) break;
    } catch (error) {
      if ((error as Error).message.startsWith('service exited')) throw error;
    }
    if (Date.now() > deadline) throw new Error(`service never came up: ${stderr}`);
    await sleep(150);
  }
  service.removeAllListeners('exit');
});

afterAll(() => {
  service?.kill();
});

describe('hypoglycemia scenario', () => {
  it('walks entry to handover, confirming the suggested branches', async () => {
    const client = new ApiClient(base);
    const store = new UiStore();
    const received: StreamEvent[] = [];

    // select entry: the picker's create action
    const view = await client.createSession('p-hypo', 'bpr_hypoglykaemie');
    const sid = view.session_id;
    store.addSession(view);
    expect(view.current).toBe('hypo_bz_check');
    expect(view.status).toBe('awaiting_value');
    expect(view.path_label).toBe('hypoglykaemie');

    const stream = new EventStream(
      base,
      sid,
      (event) => {
        received.push(event);
        store.applyEvent(sid, event);
      },
      {
        timeoutSeconds: 5,
        retryDelayMs: 50,
        onStatus: (state) => store.setConnection(sid, state),
      },
    );

    // measurement arrives: 55 mg/dl, at or below the 60 bound
    const t0 = Date.now();
    await client.postVitals({
      patient_id: 'p-hypo',
      parameter: 'BLOOD_SUGAR',
      reading: 55.0,
      unit: 'mg/dl',
      timestamp_ms: t0,
    });

    await until(() => store.session(sid).prompt?.kind === 'value_confirmation',
      'value confirmation for the 55 mg/dl reading');
    const prompt = store.session(sid).prompt!;
    expect(prompt.suggested).toBe('yes');
    expect(prompt.attached_value).toMatchObject({
      parameter: 'BLOOD_SUGAR',
      reading: 55.0,
      in_range: true,
      stale: false,
    });

    // the screen shows the reading in range with the branch pre-highlighted,
    // and nothing submits until the responder approves
    const screen = renderPrompt(store.session(sid));
    expect(screen).toContain('reading in-range');
    expect(screen).toContain('<strong>55</strong>');
    // the suggestion line carries the label of the suggested branch target
    expect(screen).toContain('suggested: <em>Patient wach und schluckfähig?</em>');
    expect(screen).toContain('data-action="confirm" data-approve="true"');

    await client.confirm(sid, true);
    await until(() => store.session(sid).current === 'hypo_wach_check', 'awake/swallow check');
    await client.decide(sid, 'yes');
    await until(() => store.session(sid).current === 'hypo_glukose_oral', 'oral glucose step');

    // follow-up measurement lands before the recheck asks for one
    await client.postVitals({
      patient_id: 'p-hypo',
      parameter: 'BLOOD_SUGAR',
      reading: 90.0,
      unit: 'mg/dl',
      timestamp_ms: t0 + 60_000,
    });
    await client.decide(sid, 'ok');

    await until(
      () =>
        store.session(sid).prompt?.kind === 'value_confirmation' &&
        store.session(sid).prompt?.attached_value?.reading === 90.0,
      'recheck confirmation for the 90 mg/dl reading',
    );
    expect(store.session(sid).prompt?.suggested).toBe('no');
    expect(store.session(sid).prompt?.attached_value?.in_range).toBe(false);

    await client.confirm(sid, true);
    await until(() => store.session(sid).current === 'hypo_monitoring', 'monitoring step');
    await client.decide(sid, 'ok');
    await until(() => store.session(sid).current === 'hypo_transport', 'transport step');
    await client.decide(sid, 'ok'); // handover is a stop node: session ends

    // acknowledge completion: the stopped event lands and closes the stream
    await until(() => store.session(sid).status === 'stopped', 'stopped status');
    await stream.done;
    expect(received.at(-1)?.type).toBe('stopped');
    const ids = received.map((e) => e.id);
    expect(ids).toEqual(Array.from({ length: ids.length }, (_, i) => i + 1));

    const audit = await client.audit(sid);
    expect(audit.status).toBe('stopped');
    expect(audit.entries.map((e) => e.action)).toEqual([
      'created', 'auto', 'confirmed', 'choice', 'acknowledge',
      'confirmed', 'acknowledge', 'acknowledge', 'stop',
    ]);
  });
});

describe('two patient tabs', () => {
  it('badges only the tab whose session the warning targets', async () => {
    const client = new ApiClient(base);
    const store = new UiStore();
    const streams: EventStream[] = [];
    const attach = (sid: string) =>
      streams.push(
        new EventStream(base, sid, (event) => store.applyEvent(sid, event), {
          timeoutSeconds: 5,
          retryDelayMs: 50,
          onStatus: (state) => store.setConnection(sid, state),
        }),
      );

    try {
      // first patient: drive the cardiac path onto its monitoring node,
      // which watches the pulse against [50, 120]
      const watcher = await client.createSession('p-monitor', 'bpr_kardial');
      const wid = watcher.session_id;
      store.addSession(watcher);
      attach(wid);
      await client.decide(wid, 'ok');
      await client.decide(wid, 'no');
      const t0 = Date.now();
      await client.postVitals({
        patient_id: 'p-monitor',
        parameter: 'PULSE',
        reading: 80.0,
        unit: '1/min',
        timestamp_ms: t0,
      });
      await until(() => store.session(wid).prompt?.kind === 'value_confirmation',
        'pulse confirmation');
      await client.confirm(wid, true);
      await until(() => store.session(wid).current === 'kardial_monitoring',
        'monitoring position');

      // second patient in the foreground tab
      const bystander = await client.createSession('p-other', 'start');
      const bid = bystander.session_id;
      store.addSession(bystander);
      attach(bid);
      store.activate(bid);
      await until(() => store.session(bid).connection === 'open', 'bystander stream');
      const foregroundBefore = {
        status: store.session(bid).status,
        current: store.session(bid).current,
      };

      // out-of-range pulse for the monitored patient
      await client.postVitals({
        patient_id: 'p-monitor',
        parameter: 'PULSE',
        reading: 140.0,
        unit: '1/min',
        timestamp_ms: t0 + 60_000,
      });
      await until(() => store.session(wid).warnings.length === 1, 'watcher warning');
      await sleep(250); // anything misrouted to the bystander would land now

      expect(store.session(wid).warnings[0]?.message).toBe(
        'PULSE 140 1/min outside [50, 120]',
      );
      expect(store.session(wid).warningBadge).toBe(true);
      expect(store.session(bid).warnings).toHaveLength(0);
      expect(store.session(bid).warningBadge).toBe(false);
      expect(store.session(bid).status).toBe(foregroundBefore.status);
      expect(store.session(bid).current).toBe(foregroundBefore.current);

      // only the background tab carries the badge
      const tabs = renderTabs(store.snapshot());
      expect(tabs).toContain(`data-session="${wid}">p-monitor<span class="badge">`);
      expect(tabs).toContain(`data-session="${bid}">p-other</button>`);

      // switching to the warned tab clears the badge; the overlay still
      // blocks the path controls until the responder acknowledges
      store.activate(wid);
      expect(store.session(wid).warningBadge).toBe(false);
      const warnedScreen = renderSession(store.session(wid), true);
      expect(warnedScreen).toContain('overlay warning');
      expect(warnedScreen).toMatch(/class="stage inert" inert/);
      store.acknowledgeWarning(wid);
      expect(renderSession(store.session(wid), true)).not.toContain('overlay');

      // stopping one session leaves the other interactive
      await client.stop(bid);
      await until(() => store.session(bid).status === 'stopped', 'bystander stop');
      expect(store.session(wid).status).not.toBe('stopped');
      const audit = await client.audit(wid);
      expect(audit.status).not.toBe('stopped');
    } finally {
      for (const stream of streams) stream.close();
    }
  });
});
