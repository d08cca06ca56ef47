// Console controller: owns the session, wires the map, keyboard, rig
// editor, preview and job panels together. Every server reply lands in
// applySession so the whole interface always shows one revision.

import { ConsoleApi, ServiceError } from "./api.js";
import type { FreeCameraState } from "./keyboard.js";
import { maneuverForKey, moveFreeCamera } from "./keyboard.js";
import { MapView } from "./map_view.js";
import { PreviewPanel, cameraPreviewParams, freePreviewParams } from "./preview.js";
import { RigEditor } from "./rig_editor.js";
import { runJob } from "./jobs.js";
import type { JobDoc, MapDoc, RigDoc, SessionDoc } from "./types.js";

export interface ConsoleRefs {
  map: string;
  scene: string;
  rig: string;
}

export class Console {
  session: SessionDoc | null = null;
  map: MapDoc | null = null;
  rig: RigDoc | null = null;
  startLane: string | null = null;
  goalLane: string | null = null;
  simTime = 0;
  activeSensor = "free";
  freeCamera: FreeCameraState = { x: 0, y: 0, z: 50, yaw: 0, pitch: -90 };
  lastJob: JobDoc | null = null;

  readonly mapView = new MapView();
  readonly rigEditor = new RigEditor();
  readonly preview: PreviewPanel;

  private banner!: HTMLElement;
  private footer!: HTMLElement;
  private sensorSelect!: HTMLSelectElement;
  private timeSlider!: HTMLInputElement;
  private trafficSelect!: HTMLSelectElement;
  private trafficCount!: HTMLElement;
  private jobStatus!: HTMLElement;
  private scenarioInput!: HTMLInputElement;
  private routedPair: string | null = null; // de-bounce key: start>goal@revision

  constructor(
    private readonly api: ConsoleApi,
    private readonly root: HTMLElement,
  ) {
    this.preview = new PreviewPanel(api);
    this.preview.onError = (msg) => this.showError(msg);
  }

  async init(refs: ConsoleRefs): Promise<void> {
    this.buildDom();
    const session = await this.api.createSession(refs);
    this.map = await this.api.getMap(session.session_id);
    this.rig = { sensors: (await this.api.getRig(session.session_id)).sensors };
    this.rigEditor.load(this.rig);
    this.rigEditor.onSave = (rig) => void this.saveRig(rig);

    const [cx, cy] = mapCenter(this.map);
    this.freeCamera = { ...this.freeCamera, x: cx, y: cy };
    this.sensorSelect.innerHTML =
      `<option value="free">free camera</option>` +
      session.sensors
        .filter((s) => s.kind === "camera")
        .map((s) => `<option value="${s.id}">${s.id}</option>`)
        .join("");
    this.applySession(session);
    await this.refreshPreview();
  }

  // -- server state ------------------------------------------------------

  applySession(doc: SessionDoc): void {
    this.session = doc;
    this.footer.textContent = `revision ${doc.revision}`;
    this.trafficCount.textContent = `${doc.traffic_count} agents (${doc.traffic_preset ?? "none"})`;
    if (this.map) {
      this.mapView.render(this.map, doc.route, {
        start: this.startLane,
        goal: this.goalLane,
      });
    }
  }

  showError(message: string): void {
    this.banner.textContent = message;
    this.banner.classList.add("visible");
  }

  clearError(): void {
    this.banner.textContent = "";
    this.banner.classList.remove("visible");
  }

  private async mutate(call: () => Promise<SessionDoc>): Promise<boolean> {
    try {
      const doc = await call();
      this.clearError();
      this.applySession(doc);
      return true;
    } catch (err) {
      if (err instanceof ServiceError) {
        this.showError(`${err.code}: ${err.message}`);
        return false;
      }
      throw err;
    }
  }

  // -- route selection ---------------------------------------------------

  async handleLaneClick(laneId: string): Promise<void> {
    if (!this.session) return;
    if (!this.startLane || this.goalLane) {
      this.startLane = laneId;
      this.goalLane = null;
      this.applySession(this.session); // repaint selection only
      return;
    }
    this.goalLane = laneId;
    const key = `${this.startLane}>${this.goalLane}@${this.session.revision}`;
    if (key === this.routedPair) return; // same pair already routed
    const ok = await this.mutate(() =>
      this.api.setRoute(this.session!.session_id, this.startLane!, this.goalLane!),
    );
    if (ok) {
      this.routedPair = `${this.startLane}>${this.goalLane}@${this.session!.revision}`;
      await this.refreshPreview();
    } else {
      this.goalLane = null; // keep the start selection, drop the bad goal
      this.applySession(this.session);
    }
  }

  // -- keyboard ----------------------------------------------------------

  async handleKey(key: string): Promise<void> {
    if (this.activeSensor === "free") {
      const moved = moveFreeCamera(this.freeCamera, key);
      if (moved) {
        this.freeCamera = moved;
        await this.refreshPreview();
        return;
      }
    }
    if (!this.session || !this.map || !this.session.route) return;
    const m = maneuverForKey(key, {
      map: this.map,
      route: this.session.route,
      simTime: this.simTime,
    });
    if (!m) return;
    const ok = await this.mutate(() => this.api.maneuver(this.session!.session_id, m));
    if (ok) await this.refreshPreview();
  }

  // -- rig / traffic / preview / jobs -------------------------------------

  private async saveRig(rig: RigDoc): Promise<void> {
    const ok = await this.mutate(() => this.api.setRig(this.session!.session_id, rig));
    if (ok) {
      this.rig = rig;
      await this.refreshPreview();
    }
  }

  async setTraffic(preset: string, seed = 0, count: number | null = null): Promise<void> {
    const ok = await this.mutate(() =>
      this.api.setTraffic(this.session!.session_id, { preset, seed, count }),
    );
    if (ok) await this.refreshPreview();
  }

  async refreshPreview(): Promise<void> {
    if (!this.session) return;
    const params =
      this.activeSensor === "free"
        ? freePreviewParams(this.freeCamera, this.simTime)
        : cameraPreviewParams(this.rig ?? { sensors: [] }, this.activeSensor, this.simTime);
    await this.preview.request(this.session.session_id, params);
  }

  async submitJob(scenario: string, seed?: number): Promise<JobDoc> {
    this.jobStatus.textContent = "submitting…";
    try {
      const job = await runJob(this.api, { scenario, seed }, {
        intervalMs: 250,
        onUpdate: (j) => {
          this.lastJob = j;
          this.jobStatus.textContent = `${j.state} ${(j.progress * 100).toFixed(0)}%`;
        },
      });
      this.lastJob = job;
      this.jobStatus.textContent =
        job.state === "done"
          ? `done: ${job.out_dir}`
          : `failed: ${job.error?.code ?? "?"} ${job.error?.message ?? ""}`;
      return job;
    } catch (err) {
      this.jobStatus.textContent = err instanceof Error ? err.message : String(err);
      throw err;
    }
  }

  // -- dom ----------------------------------------------------------------

  private buildDom(): void {
    const doc = globalThis.document;
    this.root.innerHTML = "";

    this.banner = doc.createElement("div");
    this.banner.className = "error-banner";
    this.root.appendChild(this.banner);

    this.mapView.onLaneClick = (id) => void this.handleLaneClick(id);
    this.root.appendChild(this.mapView.svg);

    const side = doc.createElement("div");
    side.className = "side-panel";
    this.root.appendChild(side);

    this.sensorSelect = doc.createElement("select");
    this.sensorSelect.className = "sensor-select";
    this.sensorSelect.addEventListener("change", () => {
      this.activeSensor = this.sensorSelect.value;
      void this.refreshPreview();
    });
    side.appendChild(this.sensorSelect);

    this.timeSlider = doc.createElement("input");
    this.timeSlider.type = "range";
    this.timeSlider.min = "0";
    this.timeSlider.max = "30";
    this.timeSlider.step = "0.1";
    this.timeSlider.value = "0";
    this.timeSlider.className = "time-slider";
    this.timeSlider.addEventListener("input", () => {
      this.simTime = Number(this.timeSlider.value);
      void this.refreshPreview();
    });
    side.appendChild(this.timeSlider);

    side.appendChild(this.preview.img);
    side.appendChild(this.rigEditor.element);

    this.trafficSelect = doc.createElement("select");
    this.trafficSelect.className = "traffic-select";
    this.trafficSelect.innerHTML = ["ego-only", "few", "many"]
      .map((p) => `<option value="${p}">${p}</option>`)
      .join("");
    this.trafficSelect.addEventListener("change", () => {
      void this.setTraffic(this.trafficSelect.value);
    });
    side.appendChild(this.trafficSelect);

    this.trafficCount = doc.createElement("span");
    this.trafficCount.className = "traffic-count";
    side.appendChild(this.trafficCount);

    this.scenarioInput = doc.createElement("input");
    this.scenarioInput.type = "text";
    this.scenarioInput.placeholder = "scenario.json";
    this.scenarioInput.className = "scenario-input";
    side.appendChild(this.scenarioInput);

    const jobButton = doc.createElement("button");
    jobButton.type = "button";
    jobButton.textContent = "export";
    jobButton.className = "job-submit";
    jobButton.addEventListener("click", () => {
      if (this.scenarioInput.value) void this.submitJob(this.scenarioInput.value);
    });
    side.appendChild(jobButton);

    this.jobStatus = doc.createElement("div");
    this.jobStatus.className = "job-status";
    side.appendChild(this.jobStatus);

    this.footer = doc.createElement("footer");
    this.footer.className = "revision";
    this.root.appendChild(this.footer);

    doc.addEventListener("keydown", (ev: KeyboardEvent) => {
      if (ev.target instanceof HTMLInputElement) return; // typing in a form
      void this.handleKey(ev.key);
    });
  }
}

function mapCenter(map: MapDoc): [number, number] {
  const [[minX, minY], [maxX, maxY]] = map.bounds;
  return [(minX + maxX) / 2, (minY + maxY) / 2];
}
