// Thin client for the engine service. All numbers displayed in the UI
// originate from these responses; the client itself computes nothing.

export interface CheckpointInfo {
  id: string;
  L: number;
  D: number;
  T: number;
  dataset: string;
}

export interface SessionInfo {
  session: string;
  L: number;
  D: number;
  T: number;
}

export interface AnchorReport {
  t: number;
  c: number;
  target: number;
  residual: number;
}

export interface AchievedStat {
  s: number;
  e: number;
  c: number;
  stat: "sum" | "avg";
  target: number;
  achieved: number;
}

export interface EditResponse {
  seed: number;
  series: number[][][];
  trace: unknown[];
  mad: number | null;
  anchors: AnchorReport[];
  achieved_stats: AchievedStat[];
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(base + path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export function listCheckpoints(base: string): Promise<CheckpointInfo[]> {
  return request(base, "/checkpoints");
}

export function createSession(base: string, checkpoint: string): Promise<SessionInfo> {
  return request(base, "/sessions", { method: "POST", body: JSON.stringify({ checkpoint }) });
}

export function requestEdit(base: string, session: string, body: Record<string, unknown>): Promise<EditResponse> {
  return request(base, `/sessions/${session}/edit`, { method: "POST", body: JSON.stringify(body) });
}
