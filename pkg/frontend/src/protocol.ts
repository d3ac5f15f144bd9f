/**
 * Types for the session service wire protocol (docs/wire_protocol.md).
 */

export type Phase = "idle" | "awaiting_trial" | "trial_active" | "completed" | "ended";

export type TrialStatus = "pending" | "active" | "done";

export type ResponseValue =
  | "recognized_own_on_wake"
  | "report_absent_or_wrong"
  | "report_unexpected_own"
  | "no_report";

export const RESPONSE_VALUES: ResponseValue[] = [
  "recognized_own_on_wake",
  "report_absent_or_wrong",
  "report_unexpected_own",
  "no_report",
];

export interface ScheduleRow {
  trial_index: number;
  scenario_id: string;
  status: TrialStatus;
}

export interface SessionSnapshot {
  participant_id: string;
  seed: number;
  phase: Phase;
  current_trial_index: number;
  current_scenario: string | null;
  suppress_armed: boolean;
  schedule: ScheduleRow[];
  records_count: number;
  entries_applied: number;
}

export type ConsoleCommand =
  | { kind: "start_session" }
  | { kind: "advance_trial" }
  | { kind: "inject_vibration"; pattern: string }
  | { kind: "suppress_next" }
  | { kind: "record_response"; value: ResponseValue }
  | { kind: "end_session" };

/** One JSON line of the session log, pushed verbatim over SSE. */
export interface LogEntry {
  type: "header" | "command" | "event" | "trial";
  event?: string;
  at?: number;
  trial_index?: number;
  scenario_id?: string;
  source?: string;
  pattern?: string;
  bursts?: [number, number][];
  duration_ms?: number;
  value?: string;
  suppressed?: boolean;
  [key: string]: unknown;
}

export interface CommandRejection {
  code: string;
  message?: string;
}

export interface CommandResult {
  ok: boolean;
  applied?: LogEntry[];
  error?: CommandRejection;
}
