/**
 * Thin client for the engine's HTTP API. Only documented endpoints are used:
 * POST /sessions, POST /sessions/{id}/messages, GET /sessions/{id}/events,
 * GET /tools, GET /health.
 */

export interface ToolInfo {
  name: string;
  description: string;
  provenance: "seeded" | "evolved";
}

export interface ToolsResponse {
  tools: ToolInfo[];
  kb_version: number;
}

export interface MessageResponse {
  reply: string;
  events_count: number;
  kb_version: number;
}

export interface PipelineEvent {
  sequence: number;
  kind: string;
  payload: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string
  ) {
    super(message);
  }
}

async function requestJson<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  if (!response.ok) {
    throw new ApiError(response.status, `HTTP ${response.status} for ${url}`);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  async health(): Promise<{ status: string; kb_version: number }> {
    return requestJson(`${this.baseUrl}/health`);
  }

  async createSession(): Promise<string> {
    const body = await requestJson<{ session_id: string }>(`${this.baseUrl}/sessions`, {
      method: "POST",
    });
    return body.session_id;
  }

  async sendMessage(sessionId: string, text: string): Promise<MessageResponse> {
    return requestJson(`${this.baseUrl}/sessions/${sessionId}/messages`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  async fetchTools(): Promise<ToolsResponse> {
    return requestJson(`${this.baseUrl}/tools`);
  }

  eventsUrl(sessionId: string, after = 0): string {
    return `${this.baseUrl}/sessions/${sessionId}/events?after=${after}`;
  }
}
