/**
 * Console view state: a pure function of (last snapshot, event stream
 * prefix). All authoritative state lives in the service; replaying the
 * same entries over the same snapshot reproduces the same view.
 */

import type { LogEntry, Phase, ScheduleRow, SessionSnapshot } from "./protocol.js";

export interface FeedRow {
  at: number;
  label: string;
}

export interface ConsoleSessionView {
  participantId: string;
  phase: Phase;
  currentTrialIndex: number;
  currentScenario: string | null;
  suppressArmed: boolean;
  schedule: ScheduleRow[];
  feed: FeedRow[];
  /** response entry is enabled only while a trial is active and unanswered */
  responseEntryEnabled: boolean;
  lastRecordedResponse: string | null;
  entriesApplied: number;
}

export function viewFromSnapshot(snapshot: SessionSnapshot): ConsoleSessionView {
  return {
    participantId: snapshot.participant_id,
    phase: snapshot.phase,
    currentTrialIndex: snapshot.current_trial_index,
    currentScenario: snapshot.current_scenario,
    suppressArmed: snapshot.suppress_armed,
    schedule: snapshot.schedule.map((row) => ({ ...row })),
    feed: [],
    responseEntryEnabled: snapshot.phase === "trial_active",
    lastRecordedResponse: null,
    entriesApplied: snapshot.entries_applied,
  };
}

function describe(entry: LogEntry): string | null {
  switch (entry.event) {
    case "session_started":
      return "session started";
    case "trial_started":
      return `trial ${entry.trial_index} started (${entry.scenario_id}${entry.suppressed ? ", suppressed" : ""})`;
    case "vibration_emitted": {
      const pattern = entry.pattern ? ` "${entry.pattern}"` : "";
      return `vibration${pattern} from ${entry.source}, ${entry.duration_ms} ms`;
    }
    case "suppress_armed":
      return "next stimulus will be suppressed";
    case "response_recorded":
      return `trial ${entry.trial_index}: response "${entry.value}"`;
    case "trial_completed":
      return `trial ${entry.trial_index} done`;
    case "session_ended":
      return "session ended";
    default:
      return null;
  }
}

/** Fold one log entry into the view; returns a new view object. */
export function applyEntry(view: ConsoleSessionView, entry: LogEntry): ConsoleSessionView {
  const next: ConsoleSessionView = {
    ...view,
    schedule: view.schedule.map((row) => ({ ...row })),
    feed: [...view.feed],
    entriesApplied: view.entriesApplied + 1,
  };
  if (entry.type === "header") {
    const schedule = entry["schedule"];
    if (Array.isArray(schedule)) {
      next.schedule = (schedule as string[]).map((sid, i) => ({
        trial_index: i + 1,
        scenario_id: sid,
        status: "pending",
      }));
    }
    return next;
  }
  if (entry.type === "event") {
    const label = describe(entry);
    if (label) next.feed.push({ at: entry.at ?? 0, label });
    switch (entry.event) {
      case "session_started":
        next.phase = "awaiting_trial";
        break;
      case "trial_started": {
        const index = entry.trial_index ?? 0;
        next.currentTrialIndex = index;
        next.currentScenario = entry.scenario_id ?? null;
        next.suppressArmed = false;
        next.phase = "trial_active";
        next.responseEntryEnabled = true;
        if (next.schedule[index - 1]) next.schedule[index - 1].status = "active";
        break;
      }
      case "suppress_armed":
        next.suppressArmed = true;
        break;
      case "response_recorded":
        next.lastRecordedResponse = (entry.value as string) ?? null;
        next.responseEntryEnabled = false;
        break;
      case "trial_completed": {
        const index = entry.trial_index ?? 0;
        if (next.schedule[index - 1]) next.schedule[index - 1].status = "done";
        next.currentTrialIndex = 0;
        next.currentScenario = null;
        const allDone = next.schedule.every((row) => row.status === "done");
        next.phase = allDone ? "completed" : "awaiting_trial";
        break;
      }
      case "session_ended":
        next.phase = "ended";
        next.responseEntryEnabled = false;
        break;
    }
  }
  return next;
}

export function applyEntries(
  view: ConsoleSessionView,
  entries: LogEntry[],
): ConsoleSessionView {
  return entries.reduce(applyEntry, view);
}
