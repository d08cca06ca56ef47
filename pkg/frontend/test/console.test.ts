// End-to-end console workflow against the scripted service double:
// open a session, click a route, steer with the keyboard, edit the rig,
// and run an export job to completion.

import { beforeEach, describe, expect, it } from "vitest";

import { ConsoleApi } from "../src/api.js";
import { Console } from "../src/console.js";
import { FakeService } from "./fake_service.js";

const REFS = { map: "m", scene: "s", rig: "r" };

function clickLane(root: HTMLElement, laneId: string): void {
  const g = root.querySelector(`g[data-lane-id="${laneId}"]`);
  expect(g, `lane ${laneId} rendered`).toBeTruthy();
  g!.dispatchEvent(new MouseEvent("click", { bubbles: true }));
}

async function settle(): Promise<void> {
  // drain the microtask chain behind click/key handlers
  for (let i = 0; i < 20; i++) await Promise.resolve();
}

describe("console workflow", () => {
  let fake: FakeService;
  let root: HTMLElement;
  let console_: Console;

  beforeEach(async () => {
    fake = new FakeService();
    root = document.createElement("div");
    document.body.innerHTML = "";
    document.body.appendChild(root);
    console_ = new Console(new ConsoleApi("", fake.fetchFn), root);
    await console_.init(REFS);
  });

  it("loads the fixture into the map view", () => {
    expect(root.querySelectorAll("g[data-lane-id]")).toHaveLength(7);
    expect(root.querySelector("footer.revision")!.textContent).toBe("revision 0");
    expect(root.querySelectorAll("polyline.route")).toHaveLength(0);
  });

  it("clicking start and goal draws the returned route polyline", async () => {
    clickLane(root, "a1");
    await settle();
    expect(root.querySelector('g[data-lane-id="a1"]')!.getAttribute("class")).toContain(
      "selected-start",
    );

    clickLane(root, "a2");
    await settle();
    const segments = root.querySelectorAll("polyline.route");
    expect(segments).toHaveLength(2);
    expect(console_.mapView.routeLanes()).toEqual(["a1", "a2"]);
    expect(segments[0].getAttribute("points")).toBeTruthy();
    expect(root.querySelector("footer.revision")!.textContent).toBe("revision 1");
  });

  it("routing to a disconnected goal shows the error code and keeps no stale highlight", async () => {
    clickLane(root, "a1");
    clickLane(root, "island");
    await settle();
    const banner = root.querySelector(".error-banner")!;
    expect(banner.textContent).toContain("NO_ROUTE");
    expect(root.querySelectorAll("polyline.route")).toHaveLength(0);
    expect(root.querySelector("footer.revision")!.textContent).toBe("revision 0");
  });

  it("re-clicking the same pair issues no duplicate route request", async () => {
    clickLane(root, "a1");
    clickLane(root, "a2");
    await settle();
    const routeCalls = () => fake.requests.filter((r) => r.path.endsWith("/route")).length;
    expect(routeCalls()).toBe(1);

    clickLane(root, "a1");
    clickLane(root, "a2");
    await settle();
    expect(routeCalls()).toBe(1);
  });

  it("ArrowLeft shifts the route highlight where a neighbor exists", async () => {
    clickLane(root, "a1");
    clickLane(root, "a2");
    await settle();
    expect(console_.mapView.routeLanes()).toEqual(["a1", "a2"]);

    await console_.handleKey("ArrowLeft");
    await settle();
    expect(console_.mapView.routeLanes()).toEqual(["a1", "b1", "b2"]);
    expect(root.querySelector(".error-banner")!.textContent).toBe("");
    expect(root.querySelector("footer.revision")!.textContent).toBe("revision 2");
  });

  it("ArrowLeft without a neighbor shows an inline error and keeps the highlight", async () => {
    clickLane(root, "b1");
    clickLane(root, "b2");
    await settle();
    const before = console_.mapView.routeLanes();
    const revBefore = root.querySelector("footer.revision")!.textContent;

    await console_.handleKey("ArrowLeft");
    await settle();
    expect(root.querySelector(".error-banner")!.textContent).toContain("NO_NEIGHBOR");
    expect(console_.mapView.routeLanes()).toEqual(before);
    expect(root.querySelector("footer.revision")!.textContent).toBe(revBefore);
  });

  it("editing fx in the rig editor changes the model params of the next preview request", async () => {
    // look through the rig camera so previews carry its model
    console_.activeSensor = "cam_front";
    await console_.refreshPreview();
    const before = fake.previewRequests().at(-1)!;
    expect(before.get("sensor")).toBe("cam_front");
    expect(Number(before.get("fx"))).toBeCloseTo(250, 9); // 480-wide native model

    const fxInput = console_.rigEditor.input("cam_front", "fx")!;
    fxInput.value = "500";
    fxInput.dispatchEvent(new Event("change", { bubbles: true }));
    (root.querySelector("button.rig-save") as HTMLButtonElement).click();
    await settle();

    const after = fake.previewRequests().at(-1)!;
    expect(after.get("sensor")).toBe("cam_front");
    expect(Number(after.get("fx"))).toBeCloseTo(500, 9);
    expect(Number(after.get("fx"))).not.toBeCloseTo(Number(before.get("fx")), 9);
  });

  it("submits a job and reports it reaching done", async () => {
    const input = root.querySelector("input.scenario-input") as HTMLInputElement;
    input.value = "demo/scenario.json";
    const job = await console_.submitJob(input.value);
    expect(job.state).toBe("done");
    expect(job.progress).toBe(1);
    expect(root.querySelector(".job-status")!.textContent).toContain("done");
    expect(console_.lastJob?.manifest).toBeTruthy();
  });
});
