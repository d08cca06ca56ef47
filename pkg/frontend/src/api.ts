// Thin typed client for the oasim service. All state lives server-side;
// this module only shapes requests and raises envelope errors.

import type {
  JobBody,
  JobDoc,
  ManeuverBody,
  MapDoc,
  RigDoc,
  SessionDoc,
  TrafficBody,
} from "./types.js";

export const REVISION_HEADER = "X-OASim-Revision";

export class ServiceError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

export interface PreviewParams {
  sensor: string;
  t?: number;
  x?: number;
  y?: number;
  z?: number;
  yaw?: number;
  pitch?: number;
  w?: number;
  h?: number;
  fx?: number;
  fy?: number;
}

export interface PreviewResult {
  blob: Blob;
  revision: number;
}

function previewQuery(params: PreviewParams): string {
  const q = new URLSearchParams();
  for (const [key, value] of Object.entries(params)) {
    if (value !== undefined && value !== null) q.set(key, String(value));
  }
  return q.toString();
}

export class ConsoleApi {
  constructor(
    readonly baseUrl = "",
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async send<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) throw await toServiceError(res);
    return (await res.json()) as T;
  }

  createSession(refs: { map: string; scene: string; rig: string }): Promise<SessionDoc> {
    return this.send("POST", "/sessions", refs);
  }

  getSession(id: string): Promise<SessionDoc> {
    return this.send("GET", `/sessions/${id}`);
  }

  setRoute(id: string, startLane: string, goalLane: string): Promise<SessionDoc> {
    return this.send("POST", `/sessions/${id}/route`, {
      start_lane: startLane,
      goal_lane: goalLane,
    });
  }

  maneuver(id: string, body: ManeuverBody): Promise<SessionDoc> {
    return this.send("POST", `/sessions/${id}/maneuver`, body);
  }

  setTraffic(id: string, body: TrafficBody): Promise<SessionDoc> {
    return this.send("POST", `/sessions/${id}/traffic`, body);
  }

  getRig(id: string): Promise<RigDoc & { revision: number }> {
    return this.send("GET", `/sessions/${id}/rig`);
  }

  setRig(id: string, rig: RigDoc): Promise<SessionDoc> {
    return this.send("PUT", `/sessions/${id}/rig`, { sensors: rig.sensors });
  }

  getMap(id: string): Promise<MapDoc> {
    return this.send("GET", `/sessions/${id}/map`);
  }

  previewUrl(id: string, params: PreviewParams): string {
    return `${this.baseUrl}/sessions/${id}/preview?${previewQuery(params)}`;
  }

  async fetchPreview(
    id: string,
    params: PreviewParams,
    signal?: AbortSignal,
  ): Promise<PreviewResult> {
    const res = await this.fetchFn(this.previewUrl(id, params), { signal });
    if (!res.ok) throw await toServiceError(res);
    const revision = Number(res.headers.get(REVISION_HEADER) ?? "0");
    return { blob: await res.blob(), revision };
  }

  createJob(body: JobBody): Promise<JobDoc> {
    return this.send("POST", "/jobs", body);
  }

  getJob(jobId: string): Promise<JobDoc> {
    return this.send("GET", `/jobs/${jobId}`);
  }
}

async function toServiceError(res: Response): Promise<ServiceError> {
  let code = "ERROR";
  let message = `${res.status} ${res.statusText}`;
  try {
    const body = (await res.json()) as { code?: string; message?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ServiceError(code, message, res.status);
}
