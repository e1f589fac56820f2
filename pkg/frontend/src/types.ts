// Mirrors the session service envelope, schema_version 1.

export type SlotName =
  | "departure_city"
  | "departure_station"
  | "arrival_city"
  | "date"
  | "departure_time"
  | "hour"
  | "confirmation";

export type SlotStatus = "unknown" | "hypothesized" | "confirmed" | "denied";

export type SlotPair = [string, string];

export interface SlotState {
  status: SlotStatus;
  value: string | null;
}

export interface Solution {
  train_class: string;
  train_id: string;
  departure_city: string;
  departure_station: string | null;
  departure_time: string;
  arrival_city: string;
  arrival_station: string | null;
  arrival_time: string;
  dates: string[];
  times: string[];
}

export interface ActPayload {
  kind: string;
  text: string;
  template_id: string;
  requested: SlotName | null;
  isolated: boolean;
  focused: SlotPair[];
  solutions: Solution[];
  query: SlotPair[];
  retry_kind: string | null;
}

export interface Expectation {
  kind: string;
  focused: SlotPair[];
  requested: SlotName | null;
  implicature: boolean;
}

export interface FocusNode {
  id: number;
  parent: number | null;
  mode: string;
  slots: Record<string, string>;
  requested: string[];
  under_confirmation: string[];
  origin_cycle: number | null;
  open: boolean;
}

export interface FocusTree {
  active: number;
  nodes: FocusNode[];
}

export interface TransmissionLog {
  failed: boolean;
  deleted: string[];
  substituted: [string, string, string][];
  reverted: [string, string, string][];
  misparse_applied: number | null;
  dropped: string[];
}

export interface TracePayload {
  text: string | null;
  intended: SlotPair[] | null;
  heard: SlotPair[] | null;
  unparseable: boolean;
  forced: Record<string, unknown> | null;
  channel: TransmissionLog;
}

export interface LastEvent {
  kind: string;
  corrected: string[];
  target_cycle: number | null;
}

export interface EnvelopeState {
  slot_store: Record<string, SlotState>;
  pending: SlotPair[];
  focus_tree: FocusTree;
  turns: number;
  closed: boolean;
  failed: boolean;
  node: string;
  last_event: LastEvent | null;
  last_query: Record<string, string> | null;
  expectations: Expectation[];
  last_trace: TracePayload | null;
}

export interface ChannelSummary {
  p_fail: number;
  p_delete: number;
  isolated_factor: number;
  substitutions: [string, string, number][];
}

export interface Envelope {
  schema_version: number;
  session_id: string;
  turn: number;
  closed: boolean;
  failed: boolean;
  act: ActPayload;
  acts: ActPayload[];
  state: EnvelopeState;
  channel: ChannelSummary;
}

export interface CorruptDirective {
  kind: "substitute" | "delete" | "fail";
  source?: string;
  target?: string;
  slot?: string;
}

export interface UtteranceBody {
  text?: string;
  frame?: Record<string, string>;
  corrupt?: CorruptDirective;
}

export interface CreateBody {
  channel?: Record<string, unknown>;
  seed?: number;
}
