/**
 * Browser entry point: connect to the session service, render the live
 * view, and wire the supervisor controls.
 */

import { CommandRejectedError, SessionClient, type EventSubscription } from "./client.js";
import { RESPONSE_VALUES, type ConsoleCommand, type ResponseValue } from "./protocol.js";
import { applyEntry, viewFromSnapshot, type ConsoleSessionView } from "./view.js";

const RESPONSE_LABELS: Record<ResponseValue, string> = {
  recognized_own_on_wake: "My pattern (on wake)",
  report_absent_or_wrong: "Absent / wrong pattern",
  report_unexpected_own: "My pattern, unexpected",
  no_report: "Nothing to report",
};

let client: SessionClient | null = null;
let subscription: EventSubscription | null = null;
let view: ConsoleSessionView | null = null;
let stale = false;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function toast(message: string, isError = true): void {
  const box = el<HTMLDivElement>("toast");
  box.textContent = message;
  box.className = isError ? "toast error" : "toast";
  box.style.display = "block";
  setTimeout(() => (box.style.display = "none"), 4000);
}

function setBanner(text: string | null): void {
  const banner = el<HTMLDivElement>("banner");
  banner.style.display = text ? "block" : "none";
  banner.textContent = text ?? "";
}

function render(): void {
  if (!view) return;
  el<HTMLSpanElement>("participant").textContent = view.participantId || "-";
  el<HTMLSpanElement>("phase").textContent = view.phase + (stale ? " (stale)" : "");
  el<HTMLSpanElement>("current").textContent = view.currentTrialIndex
    ? `trial ${view.currentTrialIndex} / ${view.currentScenario}`
    : "-";
  el<HTMLSpanElement>("suppress-state").textContent = view.suppressArmed ? "armed" : "off";

  const table = el<HTMLTableSectionElement>("schedule-body");
  table.replaceChildren(
    ...view.schedule.map((row) => {
      const tr = document.createElement("tr");
      tr.className = row.status;
      for (const text of [String(row.trial_index), row.scenario_id, row.status]) {
        const td = document.createElement("td");
        td.textContent = text;
        tr.appendChild(td);
      }
      return tr;
    }),
  );

  const feed = el<HTMLUListElement>("feed");
  feed.replaceChildren(
    ...view.feed
      .slice(-100)
      .reverse()
      .map((row) => {
        const li = document.createElement("li");
        li.textContent = `[${(row.at / 1000).toFixed(1)}s] ${row.label}`;
        return li;
      }),
  );

  const respPanel = el<HTMLDivElement>("responses");
  respPanel.querySelectorAll("button").forEach((b) => {
    (b as HTMLButtonElement).disabled = !view!.responseEntryEnabled;
  });
}

async function submit(command: ConsoleCommand): Promise<void> {
  if (!client) return;
  try {
    // optimistic updates are reconciled by the authoritative event stream;
    // we simply wait for the applied entries and let SSE drive the view
    await client.submit(command);
  } catch (err) {
    if (err instanceof CommandRejectedError) {
      toast(`rejected: ${err.message} (${err.code})`);
    } else {
      toast(String(err));
    }
  }
}

async function connect(): Promise<void> {
  const base = el<HTMLInputElement>("service-url").value.replace(/\/$/, "");
  subscription?.close();
  client = new SessionClient(base);
  try {
    const snapshot = await client.getSnapshot();
    view = viewFromSnapshot(snapshot);
    stale = false;
    setBanner(null);
    render();
  } catch (err) {
    setBanner(`cannot reach service at ${base} — retrying in 3s`);
    setTimeout(connect, 3000);
    return;
  }
  subscription = client.subscribeEvents(
    (entry) => {
      if (view) {
        view = applyEntry(view, entry);
        render();
      }
    },
    () => {
      stale = true;
      setBanner("connection lost — view may be stale; retrying in 3s");
      render();
      setTimeout(connect, 3000);
    },
  );
}

function wireControls(): void {
  el<HTMLButtonElement>("connect").addEventListener("click", () => void connect());
  el<HTMLButtonElement>("start").addEventListener("click", () => void submit({ kind: "start_session" }));
  el<HTMLButtonElement>("advance").addEventListener("click", () => void submit({ kind: "advance_trial" }));
  el<HTMLButtonElement>("suppress").addEventListener("click", () => void submit({ kind: "suppress_next" }));
  el<HTMLButtonElement>("end").addEventListener("click", () => void submit({ kind: "end_session" }));
  el<HTMLButtonElement>("inject").addEventListener("click", () => {
    const pattern = el<HTMLInputElement>("inject-pattern").value.trim();
    void submit({ kind: "inject_vibration", pattern });
  });

  const respPanel = el<HTMLDivElement>("responses");
  for (const value of RESPONSE_VALUES) {
    const button = document.createElement("button");
    button.textContent = RESPONSE_LABELS[value];
    button.disabled = true;
    button.addEventListener("click", () => void submit({ kind: "record_response", value }));
    respPanel.appendChild(button);
  }
}

wireControls();
void connect();
