import { describe, expect, it } from 'vitest';

import { interactive, UiStore } from '../src/store.js';
import type { SessionView, StreamEvent } from '../src/types.js';

function view(id: string, patient = 'p1'): SessionView {
  return {
    session_id: id,
    patient_id: patient,
    status: 'awaiting_decision',
    current: 'n1',
    path_label: null,
    prompt: null,
  };
}

function warning(sessionId: string, message = 'out of range'): StreamEvent {
  return {
    id: 1,
    type: 'warning',
    body: { session_id: sessionId, message, parameter: 'PULSE', reading: 140, unit: '1/min' },
  };
}

describe('UiStore', () => {
  it('activates the first session automatically', () => {
    const store = new UiStore();
    store.addSession(view('s1'));
    store.addSession(view('s2'));
    expect(store.active()?.sessionId).toBe('s1');
  });

  it('applies prompt events to status, prompt and position', () => {
    const store = new UiStore();
    store.addSession(view('s1'));
    store.applyEvent('s1', {
      id: 1,
      type: 'prompt',
      body: {
        session_id: 's1',
        status: 'awaiting_decision',
        prompt: {
          node: 'n2',
          node_kind: 'decisionYN',
          kind: 'binary',
          title: 't',
          options: [],
          suggested: null,
          info_available: false,
          attached_value: null,
          invasive: false,
          linked_procedures: [],
        },
      },
    });
    const state = store.session('s1');
    expect(state.current).toBe('n2');
    expect(state.prompt?.kind).toBe('binary');
  });

  it('badges a background session on warning and leaves the foreground alone', () => {
    const store = new UiStore();
    store.addSession(view('s1'));
    store.addSession(view('s2', 'p2'));
    store.activate('s1');
    const before = { ...store.session('s1') };

    store.applyEvent('s2', warning('s2'));

    const backgrounded = store.session('s2');
    expect(backgrounded.warningBadge).toBe(true);
    expect(backgrounded.warnings).toHaveLength(1);
    const foreground = store.session('s1');
    expect(foreground.warningBadge).toBe(false);
    expect(foreground.warnings).toHaveLength(0);
    expect(foreground.status).toBe(before.status);
    expect(foreground.current).toBe(before.current);
  });

  it('does not badge the active session but still queues the warning', () => {
    const store = new UiStore();
    store.addSession(view('s1'));
    store.applyEvent('s1', warning('s1'));
    const state = store.session('s1');
    expect(state.warningBadge).toBe(false);
    expect(state.warnings).toHaveLength(1);
    expect(interactive(state)).toBe(false);
  });

  it('clears the badge on tab switch but keeps the warning queued for the ack', () => {
    const store = new UiStore();
    store.addSession(view('s1'));
    store.addSession(view('s2', 'p2'));
    store.applyEvent('s2', warning('s2'));
    expect(store.session('s2').warningBadge).toBe(true);

    store.activate('s2');
    const state = store.session('s2');
    expect(state.warningBadge).toBe(false);
    expect(state.warnings).toHaveLength(1);

    store.acknowledgeWarning('s2');
    expect(store.session('s2').warnings).toHaveLength(0);
    store.setConnection('s2', 'open');
    expect(interactive(store.session('s2'))).toBe(true);
  });

  it('tracks position from audit events', () => {
    const store = new UiStore();
    store.addSession(view('s1'));
    store.applyEvent('s1', {
      id: 1,
      type: 'audit',
      body: {
        action: 'audit',
        session_id: 's1',
        entry: { seq: 1, ts: 1.0, node: 'n1', action: 'auto', to: 'n2' },
      },
    });
    expect(store.session('s1').current).toBe('n2');
    expect(store.session('s1').audit).toHaveLength(1);
  });

  it('stopping one session leaves the others untouched', () => {
    const store = new UiStore();
    store.addSession(view('s1'));
    store.addSession(view('s2', 'p2'));
    store.setConnection('s1', 'open');
    store.applyEvent('s2', {
      id: 1,
      type: 'stopped',
      body: { action: 'stopped', session_id: 's2' },
    });
    expect(store.session('s2').status).toBe('stopped');
    expect(store.session('s2').prompt).toBeNull();
    expect(interactive(store.session('s2'))).toBe(false);
    expect(store.session('s1').status).toBe('awaiting_decision');
    expect(interactive(store.session('s1'))).toBe(true);
  });

  it('blocks interaction while busy or disconnected', () => {
    const store = new UiStore();
    store.addSession(view('s1'));
    store.setConnection('s1', 'open');
    expect(interactive(store.session('s1'))).toBe(true);
    store.setBusy('s1', true);
    expect(interactive(store.session('s1'))).toBe(false);
    store.setBusy('s1', false);
    store.setConnection('s1', 'reconnecting');
    expect(interactive(store.session('s1'))).toBe(false);
  });

  it('notifies subscribers once per change and supports unsubscribe', () => {
    const store = new UiStore();
    let calls = 0;
    const unsubscribe = store.subscribe(() => {
      calls += 1;
    });
    store.addSession(view('s1'));
    expect(calls).toBe(1);
    unsubscribe();
    store.setBusy('s1', true);
    expect(calls).toBe(1);
  });
});
