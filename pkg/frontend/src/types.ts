// Wire types for the treatment-path service. These mirror the JSON the
// HTTP endpoints and the per-session event stream emit; nothing here is
// invented on the client side.

export type SessionStatus =
  | 'active'
  | 'awaiting_decision'
  | 'awaiting_value'
  | 'awaiting_path_confirmation'
  | 'stopped';

export type PromptKind =
  | 'binary'
  | 'multi_choice'
  | 'acknowledge'
  | 'value_confirmation'
  | 'path_change_confirmation';

export interface PromptOption {
  key: string;
  target: string;
  label: string;
}

export interface AttachedValue {
  parameter: string;
  reading: number;
  unit: string;
  in_range: boolean;
  stale: boolean;
}

export interface PromptPayload {
  node: string;
  node_kind: string;
  kind: PromptKind;
  title: string;
  options: PromptOption[];
  suggested: string | null;
  info_available: boolean;
  attached_value: AttachedValue | null;
  invasive: boolean;
  linked_procedures: Array<{ target: string; name: string }>;
}

export interface SessionView {
  session_id: string;
  patient_id: string;
  status: SessionStatus;
  current: string;
  path_label: string | null;
  prompt: PromptPayload | null;
}

export interface SessionSummary {
  session_id: string;
  patient_id: string;
  status: SessionStatus;
  current: string;
}

export interface AuditEntry {
  seq: number;
  ts: number;
  node: string;
  action: string;
  prompt_kind?: string;
  choice?: string;
  to?: string;
  value?: AttachedValue;
}

export interface AuditExport {
  session_id: string;
  patient_id: string;
  status: SessionStatus;
  entries: AuditEntry[];
}

export interface InfoItem {
  node: string;
  kind: string;
  name: string;
}

export interface NodeRef {
  id: string;
  name: string;
}

export interface GraphEntries {
  start: NodeRef;
  bprs: NodeRef[];
  saas: NodeRef[];
  disease_groups: NodeRef[];
}

export interface VitalsReading {
  patient_id: string;
  parameter: string;
  reading: number;
  unit?: string;
  timestamp_ms: number;
}

// ---------------------------------------------------------------------------
// Event stream payloads, keyed by the SSE `event:` field.
// ---------------------------------------------------------------------------

export interface PromptEventBody {
  session_id: string;
  status: SessionStatus;
  prompt: PromptPayload;
}

export interface WarningEventBody {
  session_id: string;
  message: string;
  parameter: string;
  reading: number;
  unit: string;
}

export interface SituationEventBody {
  session_id?: string;
  ranking: string[];
  scores: Record<string, number>;
}

export interface AuditEventBody {
  action: 'audit';
  session_id: string;
  entry: AuditEntry;
}

export interface StoppedEventBody {
  action: 'stopped';
  session_id: string;
}

export type StreamEvent =
  | { id: number; type: 'prompt'; body: PromptEventBody }
  | { id: number; type: 'warning'; body: WarningEventBody }
  | { id: number; type: 'situation'; body: SituationEventBody }
  | { id: number; type: 'audit'; body: AuditEventBody }
  | { id: number; type: 'stopped'; body: StoppedEventBody };

export type StreamEventType = StreamEvent['type'];
