/**
 * Incremental SSE frame parser plus a fetch-based stream reader. The parser
 * is separate from transport so out-of-order and chunk-boundary cases are
 * testable without sockets.
 */

export interface SseFrame {
  id?: number;
  event: string;
  data: string;
}

export class SseParser {
  private buffer = "";

  /** Feed a chunk; returns every complete frame it closed. */
  push(chunk: string): SseFrame[] {
    this.buffer += chunk;
    const parts = this.buffer.split(/\r?\n\r?\n/);
    this.buffer = parts.pop() ?? "";
    const frames: SseFrame[] = [];
    for (const part of parts) {
      const frame = parseFrame(part);
      if (frame !== null) frames.push(frame);
    }
    return frames;
  }
}

function parseFrame(block: string): SseFrame | null {
  let id: number | undefined;
  let event = "message";
  const dataLines: string[] = [];
  for (const rawLine of block.split(/\r?\n/)) {
    const line = rawLine.replace(/\r$/, "");
    if (line.startsWith("id:")) {
      id = Number(line.slice(3).trim());
    } else if (line.startsWith("event:")) {
      event = line.slice(6).trim();
    } else if (line.startsWith("data:")) {
      dataLines.push(line.slice(5).trim());
    }
  }
  if (dataLines.length === 0 && event === "message") return null;
  return { id, event, data: dataLines.join("\n") };
}

export interface StreamHandlers {
  onFrame: (frame: SseFrame) => void;
  onDone?: () => void;
  onError?: (error: unknown) => void;
}

/** Read an SSE endpoint until the server sends `event: done` or closes. */
export async function streamEvents(
  url: string,
  handlers: StreamHandlers,
  signal?: AbortSignal
): Promise<void> {
  try {
    const response = await fetch(url, { signal });
    if (!response.ok) throw new Error(`HTTP ${response.status} for ${url}`);
    if (!response.body) throw new Error("no response body");

    const reader = response.body.getReader();
    const decoder = new TextDecoder("utf-8");
    const parser = new SseParser();
    for (;;) {
      const { value, done } = await reader.read();
      if (done) break;
      for (const frame of parser.push(decoder.decode(value, { stream: true }))) {
        if (frame.event === "done") {
          handlers.onDone?.();
          return;
        }
        handlers.onFrame(frame);
      }
    }
    handlers.onDone?.();
  } catch (error) {
    handlers.onError?.(error);
  }
}
