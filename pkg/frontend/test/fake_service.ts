// Scripted stand-in for the oasim service, speaking the same HTTP/JSON
// contract through a fetch-compatible function. Responses are canned, not
// simulated; the console under test only sees the wire format.

import type {
  JobDoc,
  MapDoc,
  RigDoc,
  RouteDoc,
  SessionDoc,
} from "../src/types.js";

export const REVISION_HEADER = "X-OASim-Revision";

// 1x1 black PNG
const PNG_BYTES = Uint8Array.from(
  atob(
    "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mNk+M9QDwADhgGAWjR9awAAAABJRU5ErkJggg==",
  ),
  (c) => c.charCodeAt(0),
);

export function fixtureMap(): MapDoc {
  const line = (x0: number, x1: number, y: number) => [
    [x0, y],
    [x1, y],
  ];
  return {
    lanes: [
      { id: "a1", points: line(0, 100, 0), width: 3.5, speed_limit: 15, successors: ["a2"], left: "b1", right: null, length: 100 },
      { id: "a2", points: line(100, 200, 0), width: 3.5, speed_limit: 15, successors: ["a3", "c3"], left: "b2", right: null, length: 100 },
      { id: "a3", points: line(200, 300, 0), width: 3.5, speed_limit: 15, successors: [], left: null, right: null, length: 100 },
      { id: "c3", points: [[200, 0], [300, -20]], width: 3.5, speed_limit: 15, successors: [], left: null, right: null, length: 102 },
      { id: "b1", points: line(0, 100, 3.5), width: 3.5, speed_limit: 15, successors: ["b2"], left: null, right: "a1", length: 100 },
      { id: "b2", points: line(100, 200, 3.5), width: 3.5, speed_limit: 15, successors: [], left: null, right: "a2", length: 100 },
      { id: "island", points: line(0, 50, 40), width: 3.5, speed_limit: 15, successors: [], left: null, right: null, length: 50 },
    ],
    bounds: [
      [0, -20],
      [300, 40],
    ],
    revision: 0,
  };
}

export function fixtureRig(): RigDoc {
  return {
    sensors: [
      {
        id: "cam_front",
        kind: "camera",
        extrinsic: { translation: [1.5, 0, 1.4], rotation_wxyz: [0.5, -0.5, 0.5, -0.5] },
        model: { width: 480, height: 270, fx: 250, fy: 250, cx: 240, cy: 135, near: 0.1 },
      },
      {
        id: "lidar_top",
        kind: "lidar",
        extrinsic: { translation: [0, 0, 2], rotation_wxyz: [1, 0, 0, 0] },
        model: { elevations: [-15, -5, 5, 15], azimuth_step: 6, spin_period: 0.1, max_range: 120, range_sigma: 0, dropout: 0 },
      },
    ],
  };
}

function routeOnLanes(map: MapDoc, laneIds: string[], changeAt: number | null = null): RouteDoc {
  const byId = new Map(map.lanes.map((l) => [l.id, l]));
  const steps = laneIds.map((id, i) => ({
    lane_id: id,
    mode: i === 0 ? "start" : "successor",
    change_at: null as number | null,
    points: byId.get(id)!.points,
  }));
  if (changeAt !== null && steps.length > 1) {
    steps[1].mode = "lane-change-left";
    steps[1].change_at = changeAt;
  }
  const length = laneIds.reduce((acc, id) => acc + byId.get(id)!.length, 0);
  return { steps, total_cost: length, length, duration: length / 10 };
}

export interface RecordedRequest {
  method: string;
  path: string;
  query: URLSearchParams;
  body: unknown;
}

/** In-memory service double. `fetchFn` plugs into ConsoleApi. */
export class FakeService {
  revision = 0;
  route: RouteDoc | null = null;
  rig: RigDoc = fixtureRig();
  trafficPreset: string | null = null;
  trafficCount = 0;
  requests: RecordedRequest[] = [];
  jobPolls = 0;
  private onBLanes = false;

  readonly map = fixtureMap();

  readonly fetchFn: typeof fetch = async (input, init) => {
    const url = new URL(String(input), "http://fake");
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    this.requests.push({ method, path: url.pathname, query: url.searchParams, body });
    return this.dispatch(method, url.pathname, url.searchParams, body);
  };

  /** Preview requests seen so far, oldest first. */
  previewRequests(): URLSearchParams[] {
    return this.requests.filter((r) => r.path.endsWith("/preview")).map((r) => r.query);
  }

  private session(): SessionDoc {
    return {
      session_id: "s1",
      revision: this.revision,
      refs: { map: "m", scene: "s", rig: "r" },
      lane_count: this.map.lanes.length,
      traffic_count: this.trafficCount,
      traffic_preset: this.trafficPreset,
      sensors: this.rig.sensors.map((s) => ({ id: s.id, kind: s.kind })),
      route: this.route,
    };
  }

  private dispatch(
    method: string,
    path: string,
    query: URLSearchParams,
    body: any,
  ): Response {
    if (method === "POST" && path === "/sessions") {
      this.revision = 0;
      return json(this.session());
    }
    if (path === "/sessions/s1/map") return json({ ...this.map, revision: this.revision });
    if (method === "GET" && path === "/sessions/s1/rig") {
      return json({ ...structuredClone(this.rig), revision: this.revision });
    }
    if (method === "PUT" && path === "/sessions/s1/rig") {
      this.rig = structuredClone(body);
      this.revision += 1;
      return json(this.session());
    }
    if (method === "POST" && path === "/sessions/s1/route") {
      if (body.goal_lane === "island" || body.start_lane === "island") {
        return error(409, "NO_ROUTE", `no path from ${body.start_lane} to ${body.goal_lane}`);
      }
      this.route = routeOnLanes(this.map, [body.start_lane, body.goal_lane]);
      this.onBLanes = body.start_lane.startsWith("b");
      this.revision += 1;
      return json(this.session());
    }
    if (method === "POST" && path === "/sessions/s1/maneuver") {
      if (!this.route) return error(400, "INVALID", "no route to edit");
      if (body.kind === "lane-change-left") {
        if (this.onBLanes) return error(409, "NO_NEIGHBOR", "lane has no left neighbor");
        this.route = routeOnLanes(this.map, ["a1", "b1", "b2"], body.trigger_s);
        this.onBLanes = true;
        this.revision += 1;
        return json(this.session());
      }
      if (body.kind === "turn-select") {
        if (body.successor !== "a3" && body.successor !== "c3") {
          return error(409, "NOT_A_SUCCESSOR", `${body.successor} is not a successor`);
        }
        this.route = routeOnLanes(this.map, ["a1", "a2", body.successor]);
        this.revision += 1;
        return json(this.session());
      }
      if (body.kind === "stop" || body.kind === "lane-change-right") {
        this.revision += 1;
        return json(this.session());
      }
      return error(409, "NO_ROUTE", `unknown maneuver kind ${body.kind}`);
    }
    if (method === "POST" && path === "/sessions/s1/traffic") {
      const counts: Record<string, number> = { "ego-only": 0, few: 5, many: 25 };
      if (!(body.preset in counts)) return error(400, "INVALID", `unknown preset ${body.preset}`);
      this.trafficPreset = body.preset;
      this.trafficCount = body.count ?? counts[body.preset];
      this.revision += 1;
      return json(this.session());
    }
    if (path === "/sessions/s1/preview") {
      if (query.get("sensor") === "lidar_top") {
        return error(400, "INVALID", "sensor 'lidar_top' is not a camera");
      }
      return new Response(PNG_BYTES, {
        status: 200,
        headers: { "Content-Type": "image/png", [REVISION_HEADER]: String(this.revision) },
      });
    }
    if (method === "POST" && path === "/jobs") {
      if (!body.scenario) return error(400, "INVALID", "scenario required");
      this.jobPolls = 0;
      return json(this.job("queued", 0));
    }
    if (path === "/jobs/j1") {
      this.jobPolls += 1;
      if (this.jobPolls === 1) return json(this.job("running", 0.4));
      return json(this.job("done", 1, { artifacts: { "frame_000000/cam_front_rgb.png": "ab12" } }));
    }
    return error(404, "NOT_FOUND", `no handler for ${method} ${path}`);
  }

  private job(state: JobDoc["state"], progress: number, manifest: Record<string, unknown> | null = null): JobDoc {
    return {
      job_id: "j1",
      state,
      progress,
      out_dir: "/data/jobs/j1",
      error: null,
      manifest,
    };
  }
}

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function error(status: number, code: string, message: string): Response {
  return json({ code, message }, status);
}
