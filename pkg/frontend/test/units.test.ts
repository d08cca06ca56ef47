import { describe, expect, it } from "vitest";

import { ConsoleApi, ServiceError } from "../src/api.js";
import { egoArcLength, maneuverForKey, moveFreeCamera, turnSuccessor } from "../src/keyboard.js";
import { fitTransform, pointsAttr, toScreen } from "../src/map_view.js";
import { PreviewPanel, cameraPreviewParams, freePreviewParams } from "../src/preview.js";
import { CAMERA_PRESETS, RigEditor, validateRig } from "../src/rig_editor.js";
import { runJob } from "../src/jobs.js";
import { FakeService, fixtureMap, fixtureRig } from "./fake_service.js";

describe("map projection", () => {
  const bounds: [[number, number], [number, number]] = [
    [0, 0],
    [100, 50],
  ];

  it("fits bounds into the viewport with the margin respected", () => {
    const tf = fitTransform(bounds, 640, 480, 20);
    const [x0, y0] = toScreen(tf, 0, 0);
    const [x1, y1] = toScreen(tf, 100, 50);
    expect(Math.min(x0, x1)).toBeGreaterThanOrEqual(20 - 1e-9);
    expect(Math.max(x0, x1)).toBeLessThanOrEqual(620 + 1e-9);
    expect(Math.min(y0, y1)).toBeGreaterThanOrEqual(20 - 1e-9);
    expect(Math.max(y0, y1)).toBeLessThanOrEqual(460 + 1e-9);
  });

  it("flips the y axis so world north renders upward", () => {
    const tf = fitTransform(bounds, 640, 480, 20);
    const [, yLow] = toScreen(tf, 50, 0);
    const [, yHigh] = toScreen(tf, 50, 50);
    expect(yHigh).toBeLessThan(yLow);
  });

  it("serializes polyline points pairwise", () => {
    const tf = { scale: 1, offsetX: 0, offsetY: 0 };
    expect(pointsAttr(tf, [[1, 2], [3, 4]])).toBe("1,-2 3,-4");
  });
});

describe("keyboard mapping", () => {
  const map = fixtureMap();
  const route = {
    steps: [
      { lane_id: "a1", mode: "start", change_at: null, points: [] },
      { lane_id: "a2", mode: "successor", change_at: null, points: [] },
    ],
    total_cost: 200,
    length: 200,
    duration: 20,
  };

  it("maps arrows and space to maneuvers at the ego arc length", () => {
    const ctx = { map, route, simTime: 10 };
    expect(maneuverForKey("ArrowLeft", ctx)).toEqual({
      kind: "lane-change-left",
      trigger_s: 100,
    });
    expect(maneuverForKey("ArrowRight", ctx)?.kind).toBe("lane-change-right");
    expect(maneuverForKey(" ", ctx)?.kind).toBe("stop");
    expect(maneuverForKey("x", ctx)).toBeNull();
  });

  it("digit keys pick the branch successor in order", () => {
    const ctx = { map, route, simTime: 0 };
    expect(maneuverForKey("1", ctx)).toEqual({
      kind: "turn-select",
      trigger_s: 0,
      successor: "a3",
    });
    expect(maneuverForKey("2", ctx)?.successor).toBe("c3");
    expect(maneuverForKey("9", ctx)?.successor).toBeNull();
  });

  it("clamps the arc length to the route extent", () => {
    expect(egoArcLength(route, -5)).toBe(0);
    expect(egoArcLength(route, 1e9)).toBe(200);
    expect(egoArcLength({ ...route, duration: 0 }, 3)).toBe(0);
  });

  it("finds no successor past the last branch", () => {
    expect(turnSuccessor(map, route, 250, 1)).toBeNull();
  });

  it("free camera: E climbs, Q descends, W advances along yaw", () => {
    const cam = { x: 0, y: 0, z: 50, yaw: 90, pitch: -90 };
    expect(moveFreeCamera(cam, "e")!.z).toBeGreaterThan(cam.z);
    expect(moveFreeCamera(cam, "q")!.z).toBeLessThan(cam.z);
    const fwd = moveFreeCamera(cam, "w")!;
    expect(fwd.y).toBeGreaterThan(cam.y);
    expect(Math.abs(fwd.x)).toBeLessThan(1e-9);
    expect(moveFreeCamera(cam, "ArrowLeft")).toBeNull();
  });
});

describe("preview params", () => {
  it("scales the camera model to the preview width", () => {
    const params = cameraPreviewParams(fixtureRig(), "cam_front", 1.5);
    // native 480x270 is already at preview width
    expect(params).toEqual({ sensor: "cam_front", t: 1.5, w: 480, fx: 250, fy: 250 });
  });

  it("keeps aspect and focal scale for larger sensors", () => {
    const rig = fixtureRig();
    const cam = rig.sensors[0];
    Object.assign(cam.model, { width: 1920, height: 1080, fx: 1000, fy: 1000, cx: 960, cy: 540 });
    const params = cameraPreviewParams(rig, "cam_front", 0);
    expect(params.w).toBe(480);
    expect(params.fx).toBeCloseTo(250, 9);
    expect(params.fy).toBeCloseTo(250, 9);
  });

  it("free camera params carry the full pose", () => {
    const params = freePreviewParams({ x: 1, y: 2, z: 3, yaw: 45, pitch: -30 }, 0.5);
    expect(params).toEqual({ sensor: "free", t: 0.5, x: 1, y: 2, z: 3, yaw: 45, pitch: -30 });
  });

  it("latest request wins; the stale one is aborted", async () => {
    let release: (() => void) | null = null;
    const slowPng = new Response(new Blob([new Uint8Array([1])]), {
      headers: { "X-OASim-Revision": "1" },
    });
    const fastPng = new Response(new Blob([new Uint8Array([2])]), {
      headers: { "X-OASim-Revision": "2" },
    });
    let calls = 0;
    const fetchFn: typeof fetch = (_url, init) => {
      calls += 1;
      if (calls === 1) {
        return new Promise((resolve, reject) => {
          init?.signal?.addEventListener("abort", () =>
            reject(new DOMException("aborted", "AbortError")),
          );
          release = () => resolve(slowPng);
        });
      }
      return Promise.resolve(fastPng);
    };
    const panel = new PreviewPanel(new ConsoleApi("", fetchFn));
    const first = panel.request("s1", { sensor: "free", t: 0 });
    const second = panel.request("s1", { sensor: "free", t: 1 });
    const [a, b] = await Promise.all([first, second]);
    release?.();
    expect(a).toBeNull(); // aborted
    expect(b?.revision).toBe(2);
    expect(panel.lastRevision).toBe(2);
    expect(panel.img.getAttribute("data-revision")).toBe("2");
  });
});

describe("rig editor", () => {
  it("round-trips an untouched document exactly", () => {
    const editor = new RigEditor();
    const original = fixtureRig();
    editor.load(original);
    expect(editor.collect()).toEqual(original);
  });

  it("applies numeric edits through the form", () => {
    const editor = new RigEditor();
    editor.load(fixtureRig());
    const input = editor.input("cam_front", "fx")!;
    input.value = "312.5";
    input.dispatchEvent(new Event("change"));
    const doc = editor.collect();
    const cam = doc.sensors.find((s) => s.id === "cam_front")!;
    expect((cam.model as { fx: number }).fx).toBe(312.5);
  });

  it("presets overwrite the intrinsics", () => {
    const editor = new RigEditor();
    editor.load(fixtureRig());
    editor.setPreset("cam_front", "tele");
    const cam = editor.collect().sensors[0].model as { fx: number; width: number };
    expect(cam.fx).toBe(CAMERA_PRESETS.tele.fx);
    expect(cam.width).toBe(1920);
  });

  it("validation mirrors the sensor invariants", () => {
    const rig = fixtureRig();
    expect(validateRig(rig)).toEqual([]);
    (rig.sensors[0].model as { fx: number }).fx = -1;
    (rig.sensors[1].model as { dropout: number }).dropout = 1.5;
    const problems = validateRig(rig);
    expect(problems.some((p) => p.includes("focal"))).toBe(true);
    expect(problems.some((p) => p.includes("dropout"))).toBe(true);
    expect(validateRig({ sensors: [] })).toHaveLength(1);
  });

  it("rejects a save while invalid and surfaces the problems", () => {
    const editor = new RigEditor();
    editor.load(fixtureRig());
    let saved = 0;
    editor.onSave = () => (saved += 1);
    const input = editor.input("cam_front", "fx")!;
    input.value = "-5";
    input.dispatchEvent(new Event("change"));
    editor.save();
    expect(saved).toBe(0);
    expect(editor.element.querySelectorAll(".rig-errors li").length).toBeGreaterThan(0);
  });
});

describe("api client", () => {
  it("raises the service envelope as a typed error", async () => {
    const fake = new FakeService();
    const api = new ConsoleApi("", fake.fetchFn);
    await api.createSession({ map: "m", scene: "s", rig: "r" });
    const err = await api.setRoute("s1", "a1", "island").catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.code).toBe("NO_ROUTE");
    expect(err.status).toBe(409);
  });

  it("polls a job to completion", async () => {
    const fake = new FakeService();
    const api = new ConsoleApi("", fake.fetchFn);
    const states: string[] = [];
    const job = await runJob(api, { scenario: "x.json" }, {
      intervalMs: 0,
      onUpdate: (j) => states.push(j.state),
    });
    expect(job.state).toBe("done");
    expect(states).toEqual(["queued", "running", "done"]);
  });
});
