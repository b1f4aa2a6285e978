// Browser bootstrap: wires the API client, the session store, and the
// renderers into the DOM. All clicks go through one delegated handler
// keyed by data-action, and every state change re-renders the screen
// from the store snapshot.

import { ApiClient, ApiError } from './client.js';
import { EventStream } from './events.js';
import { UiStore } from './store.js';
import { renderEntryPicker, renderScreen } from './render.js';
import type { GraphEntries } from './types.js';

const root = document.getElementById('app');
if (root === null) throw new Error('missing #app container');

const params = new URLSearchParams(window.location.search);
const client = new ApiClient(params.get('api') ?? window.location.origin);
const store = new UiStore();
const streams = new Map<string, EventStream>();
let entries: GraphEntries | null = null;
let patientCounter = 0;

function draw(): void {
  const snapshot = store.snapshot();
  const picker = entries !== null ? renderEntryPicker(entries) : '';
  root!.innerHTML = snapshot.sessions.length
    ? renderScreen(snapshot) + `<details class="new-session"><summary>new patient</summary>${picker}</details>`
    : `<h1>pick an entry point</h1>${picker}`;
}

store.subscribe(draw);

function attachStream(sessionId: string): void {
  const stream = new EventStream(
    client.baseUrl,
    sessionId,
    (event) => store.applyEvent(sessionId, event),
    { onStatus: (state) => store.setConnection(sessionId, state) },
  );
  streams.set(sessionId, stream);
}

async function interact(sessionId: string, call: () => Promise<unknown>): Promise<void> {
  store.setBusy(sessionId, true);
  try {
    await call();
  } catch (error) {
    if (!(error instanceof ApiError)) throw error;
    // 409s mean the screen was stale (another event already moved the
    // session); the stream will repaint, nothing to do here
  } finally {
    store.setBusy(sessionId, false);
  }
}

root.addEventListener('click', (raw) => {
  const target = (raw.target as HTMLElement).closest<HTMLElement>('[data-action]');
  if (target === null) return;
  const action = target.dataset.action;
  const active = store.active();

  if (action === 'create') {
    const entry = target.dataset.entry!;
    patientCounter += 1;
    void client.createSession(`patient-${patientCounter}`, entry).then((view) => {
      store.addSession(view);
      store.activate(view.session_id);
      attachStream(view.session_id);
    });
    return;
  }
  if (action === 'activate') {
    store.activate(target.dataset.session!);
    return;
  }
  if (active === null) return;
  const sid = active.sessionId;

  switch (action) {
    case 'decide':
      void interact(sid, () => client.decide(sid, target.dataset.choice!));
      break;
    case 'confirm':
      void interact(sid, () => client.confirm(sid, target.dataset.approve === 'true'));
      break;
    case 'jump':
      void interact(sid, () => client.jump(sid, target.dataset.target!));
      break;
    case 'ack-warning':
      store.acknowledgeWarning(sid);
      break;
    case 'toggle-info':
      if (active.infoItems !== null) {
        store.closeInfo(sid);
      } else {
        void client.info(sid).then((response) => store.openInfo(sid, response.items));
      }
      break;
    case 'close-info':
      store.closeInfo(sid);
      break;
  }
});

void client.entries().then((response) => {
  entries = response;
  draw();
});
draw();
