"""Live session service: supervisor commands over HTTP, ordered event stream
over SSE, every command and event appended to the session log.

Wire protocol (see docs/wire_protocol.md for field-by-field schemas):
  GET  /session   -> JSON snapshot of the session state
  POST /commands  -> JSON command {"kind": ..., ...}; 200 on success,
                     409 with {"ok": false, "error": {...}} on rejection
  GET  /events    -> text/event-stream; one SSE frame per logged event

All mutations funnel through one lock, so commands are applied strictly
one at a time. Session state is a pure fold over the log entries: the
in-memory state is advanced only by applying entries, which makes replay
recovery (rebuilding state from the log file) exact by construction.
"""

from __future__ import annotations

import json
import queue
import random
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from . import agents, scenarios
from .metrics import header_for
from .patterns import parse_pattern
from .perceiver import DEFAULT_PROFILE, RESPONSES
from .scenarios import (
    DEFAULT_COUNTS,
    SCENARIOS,
    S4_MODE_SUPERVISOR,
    TrialRecord,
    build_schedule,
    default_world,
    run_trial,
)
from .seeds import derive_seed

COMMAND_KINDS = (
    "start_session",
    "advance_trial",
    "inject_vibration",
    "suppress_next",
    "record_response",
    "end_session",
)

PHASE_IDLE = "idle"
PHASE_AWAITING_TRIAL = "awaiting_trial"
PHASE_TRIAL_ACTIVE = "trial_active"
PHASE_COMPLETED = "completed"
PHASE_ENDED = "ended"


class CommandRejected(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass
class SessionState:
    """Pure fold over log entries; never mutated except through apply()."""

    participant_id: str = ""
    seed: int = 0
    schedule: list[str] = field(default_factory=list)
    phase: str = PHASE_IDLE
    current_index: int = 0  # 1-based; 0 = no active trial
    trial_statuses: list[str] = field(default_factory=list)  # pending/active/done
    suppress_armed: bool = False
    records: list[dict] = field(default_factory=list)
    entries_applied: int = 0

    def apply(self, entry: dict) -> None:
        self.entries_applied += 1
        kind = entry.get("type")
        if kind == "header":
            self.participant_id = entry["participant_id"]
            self.seed = entry["seed"]
            self.schedule = list(entry["schedule"])
            self.trial_statuses = ["pending"] * len(self.schedule)
        elif kind == "trial":
            self.records.append({k: v for k, v in entry.items() if k != "type"})
        elif kind == "event":
            self._apply_event(entry)
        elif kind == "command":
            pass  # audit only
        else:
            raise ValueError(f"unknown log entry type {kind!r}")

    def _apply_event(self, entry: dict) -> None:
        name = entry["event"]
        if name == "session_started":
            self.phase = PHASE_AWAITING_TRIAL
        elif name == "trial_started":
            index = entry["trial_index"]
            self.current_index = index
            self.trial_statuses[index - 1] = "active"
            self.phase = PHASE_TRIAL_ACTIVE
            self.suppress_armed = False
        elif name == "trial_completed":
            index = entry["trial_index"]
            self.trial_statuses[index - 1] = "done"
            self.current_index = 0
            done = all(s == "done" for s in self.trial_statuses)
            self.phase = PHASE_COMPLETED if done else PHASE_AWAITING_TRIAL
        elif name == "suppress_armed":
            self.suppress_armed = True
        elif name in ("vibration_emitted", "response_recorded"):
            pass
        elif name == "session_ended":
            self.phase = PHASE_ENDED
        else:
            raise ValueError(f"unknown event {name!r}")

    def snapshot(self) -> dict:
        return {
            "participant_id": self.participant_id,
            "seed": self.seed,
            "phase": self.phase,
            "current_trial_index": self.current_index,
            "current_scenario": (
                self.schedule[self.current_index - 1] if self.current_index else None
            ),
            "suppress_armed": self.suppress_armed,
            "schedule": [
                {"trial_index": i + 1, "scenario_id": sid, "status": status}
                for i, (sid, status) in enumerate(zip(self.schedule, self.trial_statuses))
            ],
            "records_count": len(self.records),
            "entries_applied": self.entries_applied,
        }


def replay_log(path: str | Path) -> SessionState:
    """Event-sourced recovery: rebuild the session state from its log."""
    state = SessionState()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            state.apply(json.loads(line))
    return state


class SessionController:
    """One live session: agents, schedule, log file, subscribers."""

    def __init__(
        self,
        participant_id: str,
        seed: int,
        enrolled_pattern: str,
        log_path: str | Path,
        counts: dict[str, int] | None = None,
        chosen_by_user: bool = True,
        s4_mode: str = S4_MODE_SUPERVISOR,
    ):
        self.lock = threading.Lock()
        self.participant_id = participant_id
        self.seed = seed
        self.s4_mode = s4_mode
        self.log_path = Path(log_path)
        self.pattern = parse_pattern(enrolled_pattern)
        self.schedule = build_schedule(
            derive_seed(seed, "schedule"), counts or DEFAULT_COUNTS, participant_id
        )
        self.world = default_world(
            derive_seed(seed, "world"),
            self.pattern,
            chosen_by_user,
            participant_id=participant_id,
            with_phishing_phone=s4_mode == "phishing",
        )
        self.trial_rng = random.Random(derive_seed(seed, "live-trials"))
        self.state = SessionState()
        self.pending_record: TrialRecord | None = None
        self._subscribers: list[queue.Queue] = []
        self._log_fh = None
        self._started_wall: float | None = None

    # -- time ----------------------------------------------------------

    def virtual_now(self) -> int:
        if self._started_wall is None:
            return 0
        return int((time.monotonic() - self._started_wall) * 1000)

    # -- log + broadcast -----------------------------------------------

    def _append(self, entry: dict) -> dict:
        line = json.dumps(entry, sort_keys=True)
        if self._log_fh is None:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
            self._log_fh = open(self.log_path, "a", encoding="utf-8")
        self._log_fh.write(line + "\n")
        self._log_fh.flush()
        self.state.apply(entry)
        for q in list(self._subscribers):
            q.put(entry)
        return entry

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        if q in self._subscribers:
            self._subscribers.remove(q)

    # -- commands --------------------------------------------------------

    def submit(self, command: dict) -> list[dict]:
        """Validate and execute one console command; returns the log
        entries it produced. Serialized via the controller lock."""
        with self.lock:
            kind = command.get("kind")
            if kind not in COMMAND_KINDS:
                raise CommandRejected("unknown_command", f"unknown command kind {kind!r}")
            handler = getattr(self, f"_cmd_{kind}")
            applied = [
                self._append(
                    {
                        "type": "command",
                        "kind": kind,
                        "args": {k: v for k, v in command.items() if k != "kind"},
                        "issued_at": self.virtual_now(),
                    }
                )
            ]
            applied.extend(handler(command))
            return applied

    def _require_phase(self, *phases: str) -> None:
        if self.state.phase not in phases:
            raise CommandRejected(
                "invalid_state",
                f"command not valid in phase {self.state.phase!r}",
            )

    def _event(self, name: str, **data) -> dict:
        return self._append({"type": "event", "event": name, "at": self.virtual_now(), **data})

    def _cmd_start_session(self, command: dict) -> list[dict]:
        self._require_phase(PHASE_IDLE)
        self._started_wall = time.monotonic()
        profile = DEFAULT_PROFILE
        header = header_for(
            self.participant_id, self.seed, self.pattern.canonical(), profile
        ).as_dict()
        header["schedule"] = list(self.schedule.order)
        header["live"] = True
        entries = [self._append(header)]
        entries.append(self._event("session_started"))
        return entries

    def _cmd_advance_trial(self, command: dict) -> list[dict]:
        self._require_phase(PHASE_AWAITING_TRIAL)
        index = sum(1 for s in self.state.trial_statuses if s == "done") + 1
        scenario = SCENARIOS[self.schedule.order[index - 1]]
        suppress = self.state.suppress_armed
        self.world.clock.now = max(self.world.clock.now, self.virtual_now())
        record = run_trial(index, scenario, self.world, self.trial_rng, s4_mode=self.s4_mode)
        if suppress and record.stimulus_bursts is not None:
            # Supervisor muted the motor for this trial.
            record.stimulus_bursts = None
            record.stimulus_source = None
            record.stimulus_at = None
            record.s4_mode = "supervisor"
        self.pending_record = record
        entries = [
            self._event(
                "trial_started",
                trial_index=index,
                scenario_id=scenario.id,
                suppressed=suppress,
            )
        ]
        if record.stimulus_bursts is not None:
            entries.append(
                self._event(
                    "vibration_emitted",
                    trial_index=index,
                    source=record.stimulus_source,
                    bursts=[list(b) for b in record.stimulus_bursts],
                    duration_ms=record.stimulus_bursts[-1][0] + record.stimulus_bursts[-1][1],
                )
            )
        return entries

    def _cmd_inject_vibration(self, command: dict) -> list[dict]:
        self._require_phase(PHASE_AWAITING_TRIAL, PHASE_TRIAL_ACTIVE, PHASE_COMPLETED)
        pattern = parse_pattern(command.get("pattern", ""))
        event = agents.inject_vibration(self.world.watch, pattern, self.virtual_now())
        return [
            self._event(
                "vibration_emitted",
                trial_index=self.state.current_index or None,
                source=event.source,
                pattern=pattern.canonical(),
                bursts=[list(b) for b in event.timeline.bursts],
                duration_ms=event.timeline.total_duration,
            )
        ]

    def _cmd_suppress_next(self, command: dict) -> list[dict]:
        self._require_phase(PHASE_AWAITING_TRIAL)
        return [self._event("suppress_armed")]

    def _cmd_record_response(self, command: dict) -> list[dict]:
        self._require_phase(PHASE_TRIAL_ACTIVE)
        value = command.get("value")
        if value not in RESPONSES:
            raise CommandRejected("bad_response", f"unknown response value {value!r}")
        record = self.pending_record
        if record is None or record.response is not None:
            raise CommandRejected("already_recorded", "trial response already recorded")
        record.fill_response(value, self.virtual_now())
        entries = [
            self._event(
                "response_recorded", trial_index=record.trial_index, value=value
            ),
            self._append({"type": "trial", **record.as_dict()}),
            self._event("trial_completed", trial_index=record.trial_index),
        ]
        self.pending_record = None
        return entries

    def _cmd_end_session(self, command: dict) -> list[dict]:
        self._require_phase(PHASE_AWAITING_TRIAL, PHASE_COMPLETED)
        entries = [self._event("session_ended")]
        if self._log_fh is not None:
            self._log_fh.flush()
        return entries

    def snapshot(self) -> dict:
        with self.lock:
            snap = self.state.snapshot()
            snap["phone"] = self.world.phone.snapshot()
            snap["watch"] = self.world.watch.snapshot()
            return snap

    def close(self) -> None:
        if self._log_fh is not None:
            self._log_fh.close()
            self._log_fh = None


class _Handler(BaseHTTPRequestHandler):
    controller: SessionController  # set by make_server
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        if self.path == "/session":
            self._send_json(200, self.controller.snapshot())
        elif self.path == "/events":
            self._stream_events()
        else:
            self._send_json(404, {"ok": False, "error": {"code": "not_found"}})

    def do_POST(self):
        if self.path != "/commands":
            self._send_json(404, {"ok": False, "error": {"code": "not_found"}})
            return
        length = int(self.headers.get("Content-Length", "0"))
        try:
            command = json.loads(self.rfile.read(length) or b"{}")
        except json.JSONDecodeError:
            self._send_json(400, {"ok": False, "error": {"code": "bad_json"}})
            return
        try:
            applied = self.controller.submit(command)
        except CommandRejected as exc:
            self._send_json(
                409, {"ok": False, "error": {"code": exc.code, "message": exc.message}}
            )
            return
        except (ValueError, KeyError) as exc:
            self._send_json(
                409, {"ok": False, "error": {"code": "invalid_command", "message": str(exc)}}
            )
            return
        self._send_json(200, {"ok": True, "applied": applied})

    def _stream_events(self):
        q = self.controller.subscribe()
        try:
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(b": connected\n\n")
            self.wfile.flush()
            while True:
                try:
                    entry = q.get(timeout=15.0)
                except queue.Empty:
                    self.wfile.write(b": keepalive\n\n")
                    self.wfile.flush()
                    continue
                name = entry.get("event") if entry.get("type") == "event" else entry.get("type")
                frame = f"event: {name}\ndata: {json.dumps(entry, sort_keys=True)}\n\n"
                self.wfile.write(frame.encode("utf-8"))
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            self.controller.unsubscribe(q)


def make_server(controller: SessionController, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"controller": controller})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server


def serve_session(controller: SessionController, host: str, port: int) -> None:
    """Run the service in the foreground until interrupted."""
    server = make_server(controller, host, port)
    actual = server.server_address[1]
    print(f"goodvibes session service on http://{host}:{actual}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        controller.close()
