import type { CreateBody, Envelope, UtteranceBody } from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url, init);
  } catch {
    throw new ApiError(0, "connection_lost", "cannot reach the dialogue service");
  }
  if (!response.ok) {
    let code = "http_error";
    let message = `${response.status}`;
    try {
      const body = await response.json();
      code = body?.detail?.error ?? code;
      message = body?.detail?.message ?? message;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, code, message);
  }
  return response.json() as Promise<T>;
}

const JSON_HEADERS = { "content-type": "application/json" };

export function makeApi(base = "") {
  return {
    createSession(body: CreateBody = {}): Promise<Envelope> {
      return request(`${base}/api/sessions`, {
        method: "POST",
        headers: JSON_HEADERS,
        body: JSON.stringify(body),
      });
    },

    getSession(sid: string): Promise<Envelope> {
      return request(`${base}/api/sessions/${sid}`);
    },

    postUtterance(sid: string, body: UtteranceBody): Promise<Envelope> {
      return request(`${base}/api/sessions/${sid}/utterance`, {
        method: "POST",
        headers: JSON_HEADERS,
        body: JSON.stringify(body),
      });
    },

    closeSession(sid: string): Promise<Envelope> {
      return request(`${base}/api/sessions/${sid}/close`, { method: "POST" });
    },

    grammar(): Promise<Record<string, unknown>> {
      return request(`${base}/api/grammar`);
    },

    transcriptUrl(sid: string): string {
      return `${base}/api/sessions/${sid}/transcript`;
    },
  };
}

export type Api = ReturnType<typeof makeApi>;
