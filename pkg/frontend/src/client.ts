// Thin fetch wrapper around the treatment-path service. Every
// state-changing user interaction in the UI maps to exactly one of these
// calls; the client never mutates local state itself.

import type {
  AuditExport,
  GraphEntries,
  InfoItem,
  SessionSummary,
  SessionView,
  VitalsReading,
} from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
    readonly path: string,
  ) {
    super(`${status} on ${path}: ${detail}`);
    this.name = 'ApiError';
  }
}

async function unwrap<T>(path: string, response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (typeof body?.detail === 'string') detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail, path);
}

export class ApiClient {
  readonly baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
  }

  private get<T>(path: string): Promise<T> {
    return fetch(this.baseUrl + path).then((r) => unwrap<T>(path, r));
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return fetch(this.baseUrl + path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    }).then((r) => unwrap<T>(path, r));
  }

  createSession(patientId: string, entry: string): Promise<SessionView> {
    return this.post('/sessions', { patient_id: patientId, entry });
  }

  listSessions(): Promise<SessionSummary[]> {
    return this.get('/sessions');
  }

  prompt(sessionId: string): Promise<SessionView> {
    return this.get(`/sessions/${sessionId}/prompt`);
  }

  decide(sessionId: string, choice: string): Promise<SessionView> {
    return this.post(`/sessions/${sessionId}/decision`, { choice });
  }

  confirm(sessionId: string, approve = true): Promise<SessionView> {
    return this.post(`/sessions/${sessionId}/confirm`, { approve });
  }

  jump(sessionId: string, target: string): Promise<SessionView> {
    return this.post(`/sessions/${sessionId}/jump`, { target });
  }

  info(sessionId: string): Promise<{ session_id: string; items: InfoItem[] }> {
    return this.get(`/sessions/${sessionId}/info`);
  }

  stop(sessionId: string): Promise<SessionView> {
    return this.post(`/sessions/${sessionId}/stop`);
  }

  audit(sessionId: string): Promise<AuditExport> {
    return this.get(`/sessions/${sessionId}/audit`);
  }

  entries(): Promise<GraphEntries> {
    return this.get('/graph/entries');
  }

  graphStats(): Promise<Record<string, unknown>> {
    return this.get('/graph/stats');
  }

  postVitals(reading: VitalsReading): Promise<{ ingested: number; record_count: number }> {
    return this.post('/vitals', reading);
  }
}
