/**
 * Session service client: snapshot fetch, command submission, and an SSE
 * subscription parsed over a fetch stream (works in browsers and node,
 * no EventSource dependency).
 */

import type { CommandResult, ConsoleCommand, LogEntry, SessionSnapshot } from "./protocol.js";

export class CommandRejectedError extends Error {
  constructor(
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "CommandRejectedError";
  }
}

export interface EventSubscription {
  close(): void;
  done: Promise<void>;
}

export class SessionClient {
  constructor(private readonly baseUrl: string) {}

  async getSnapshot(): Promise<SessionSnapshot> {
    const resp = await fetch(`${this.baseUrl}/session`);
    if (!resp.ok) throw new Error(`snapshot failed: HTTP ${resp.status}`);
    return (await resp.json()) as SessionSnapshot;
  }

  /** Submit a command; resolves with the log entries it produced, or
   * rejects with CommandRejectedError carrying the service's error code. */
  async submit(command: ConsoleCommand): Promise<LogEntry[]> {
    const resp = await fetch(`${this.baseUrl}/commands`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(command),
    });
    const body = (await resp.json()) as CommandResult;
    if (!resp.ok || !body.ok) {
      const err = body.error ?? { code: "unknown", message: `HTTP ${resp.status}` };
      throw new CommandRejectedError(err.code, err.message ?? err.code);
    }
    return body.applied ?? [];
  }

  /** Subscribe to the ordered event stream. onEntry fires once per log
   * entry in stream order; onClose fires when the connection drops. */
  subscribeEvents(
    onEntry: (entry: LogEntry) => void,
    onClose?: (error?: unknown) => void,
  ): EventSubscription {
    const controller = new AbortController();
    const done = (async () => {
      const resp = await fetch(`${this.baseUrl}/events`, { signal: controller.signal });
      if (!resp.ok || !resp.body) throw new Error(`event stream failed: HTTP ${resp.status}`);
      const reader = resp.body.getReader();
      const decoder = new TextDecoder();
      let buffer = "";
      for (;;) {
        const { value, done: eof } = await reader.read();
        if (eof) break;
        buffer += decoder.decode(value, { stream: true });
        let sep;
        while ((sep = buffer.indexOf("\n\n")) >= 0) {
          const frame = buffer.slice(0, sep);
          buffer = buffer.slice(sep + 2);
          const entry = parseSseFrame(frame);
          if (entry) onEntry(entry);
        }
      }
    })();
    done.then(
      () => onClose?.(),
      (error) => {
        if (!controller.signal.aborted) onClose?.(error);
      },
    );
    return {
      close: () => controller.abort(),
      done: done.catch(() => undefined),
    };
  }
}

/** Parse one SSE frame; comment-only frames (keepalives) yield null. */
export function parseSseFrame(frame: string): LogEntry | null {
  const dataLines = frame
    .split("\n")
    .filter((line) => line.startsWith("data:"))
    .map((line) => line.slice(5).trimStart());
  if (dataLines.length === 0) return null;
  return JSON.parse(dataLines.join("\n")) as LogEntry;
}
