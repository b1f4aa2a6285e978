// Client-side session state. One SessionState per open patient tab, fed
// exclusively by server responses and stream events: the store never
// invents state the service did not report. Warnings queue per session
// until acknowledged; a warning landing on a background tab only sets
// that tab's badge and leaves the foreground view untouched.

import type { ConnectionState } from './events.js';
import type {
  AuditEntry,
  InfoItem,
  PromptPayload,
  SessionStatus,
  SessionView,
  SituationEventBody,
  StreamEvent,
  WarningEventBody,
} from './types.js';

export interface SessionState {
  sessionId: string;
  patientLabel: string;
  status: SessionStatus;
  current: string;
  pathLabel: string | null;
  prompt: PromptPayload | null;
  /** Unacknowledged warnings, oldest first; non-empty blocks interaction. */
  warnings: WarningEventBody[];
  /** Set when a warning arrives while this tab is in the background. */
  warningBadge: boolean;
  situation: SituationEventBody | null;
  /** null while the info panel is closed. */
  infoItems: InfoItem[] | null;
  connection: ConnectionState;
  /** A state-changing request is in flight. */
  busy: boolean;
  audit: AuditEntry[];
}

export interface Snapshot {
  sessions: SessionState[];
  activeId: string | null;
}

/** True when the user may touch path controls: connected, idle, no
 * unacknowledged warning, not stopped. */
export function interactive(state: SessionState): boolean {
  return (
    state.connection === 'open' &&
    !state.busy &&
    state.warnings.length === 0 &&
    state.status !== 'stopped'
  );
}

export class UiStore {
  private sessions = new Map<string, SessionState>();
  private activeId: string | null = null;
  private listeners: Array<(snapshot: Snapshot) => void> = [];

  subscribe(listener: (snapshot: Snapshot) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    const snapshot = this.snapshot();
    for (const listener of this.listeners) listener(snapshot);
  }

  snapshot(): Snapshot {
    return { sessions: [...this.sessions.values()], activeId: this.activeId };
  }

  session(sessionId: string): SessionState {
    const state = this.sessions.get(sessionId);
    if (state === undefined) throw new Error(`unknown session ${sessionId}`);
    return state;
  }

  active(): SessionState | null {
    return this.activeId === null ? null : this.session(this.activeId);
  }

  addSession(view: SessionView): SessionState {
    const state: SessionState = {
      sessionId: view.session_id,
      patientLabel: view.patient_id,
      status: view.status,
      current: view.current,
      pathLabel: view.path_label,
      prompt: view.prompt,
      warnings: [],
      warningBadge: false,
      situation: null,
      infoItems: null,
      connection: 'connecting',
      busy: false,
      audit: [],
    };
    this.sessions.set(view.session_id, state);
    if (this.activeId === null) this.activeId = view.session_id;
    this.notify();
    return state;
  }

  activate(sessionId: string): void {
    const state = this.session(sessionId);
    this.activeId = sessionId;
    state.warningBadge = false; // seen now; the overlay still wants an ack
    this.notify();
  }

  /** Fold a POST response back in; prompt events usually arrive too, but
   * the response keeps the view exact while the stream catches up. */
  applyView(view: SessionView): void {
    const state = this.session(view.session_id);
    state.status = view.status;
    state.current = view.current;
    state.pathLabel = view.path_label;
    state.prompt = view.prompt;
    this.notify();
  }

  applyEvent(sessionId: string, event: StreamEvent): void {
    const state = this.session(sessionId);
    switch (event.type) {
      case 'prompt':
        state.status = event.body.status;
        state.prompt = event.body.prompt;
        state.current = event.body.prompt.node;
        break;
      case 'warning':
        state.warnings.push(event.body);
        if (sessionId !== this.activeId) state.warningBadge = true;
        break;
      case 'situation':
        state.situation = event.body;
        break;
      case 'audit':
        state.audit.push(event.body.entry);
        if (event.body.entry.to !== undefined) {
          state.current = event.body.entry.to;
        } else if (event.body.entry.action === 'created') {
          state.current = event.body.entry.node;
        }
        break;
      case 'stopped':
        state.status = 'stopped';
        state.prompt = null;
        state.busy = false;
        break;
    }
    this.notify();
  }

  acknowledgeWarning(sessionId: string): WarningEventBody | null {
    const state = this.session(sessionId);
    const acked = state.warnings.shift() ?? null;
    this.notify();
    return acked;
  }

  setConnection(sessionId: string, connection: ConnectionState): void {
    const state = this.session(sessionId);
    state.connection = connection;
    this.notify();
  }

  setBusy(sessionId: string, busy: boolean): void {
    this.session(sessionId).busy = busy;
    this.notify();
  }

  openInfo(sessionId: string, items: InfoItem[]): void {
    this.session(sessionId).infoItems = items;
    this.notify();
  }

  closeInfo(sessionId: string): void {
    this.session(sessionId).infoItems = null;
    this.notify();
  }
}
