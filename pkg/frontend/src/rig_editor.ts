// Form mirror of the rig document. Edits apply onto a deep clone so an
// untouched save round-trips byte-equal; validation repeats the sensor
// invariants the service enforces so bad values fail before submission.

import type { CameraModelDoc, LidarModelDoc, RigDoc, RigSensorDoc } from "./types.js";
import { isCameraModel } from "./types.js";

export interface CameraPreset {
  width: number;
  height: number;
  fx: number;
  fy: number;
  cx: number;
  cy: number;
}

export const CAMERA_PRESETS: Record<string, CameraPreset> = {
  wide: { width: 1920, height: 1080, fx: 1000, fy: 1000, cx: 960, cy: 540 },
  tele: { width: 1920, height: 1080, fx: 4000, fy: 4000, cx: 960, cy: 540 },
};

const CAMERA_FIELDS: (keyof CameraModelDoc)[] = [
  "width",
  "height",
  "fx",
  "fy",
  "cx",
  "cy",
  "near",
];
const LIDAR_FIELDS = ["range_sigma", "dropout"] as const;

export function validateRig(rig: RigDoc): string[] {
  const problems: string[] = [];
  if (!rig.sensors.length) problems.push("rig needs at least one sensor");
  const seen = new Set<string>();
  for (const s of rig.sensors) {
    if (seen.has(s.id)) problems.push(`duplicate sensor id ${s.id}`);
    seen.add(s.id);
    if (isCameraModel(s)) {
      const m = s.model;
      if (!Number.isInteger(m.width) || m.width < 1) problems.push(`${s.id}: width must be a positive integer`);
      if (!Number.isInteger(m.height) || m.height < 1) problems.push(`${s.id}: height must be a positive integer`);
      if (!(m.fx > 0) || !(m.fy > 0)) problems.push(`${s.id}: focal lengths must be > 0`);
      if (!(m.cx >= 0 && m.cx <= m.width)) problems.push(`${s.id}: cx outside [0, width]`);
      if (!(m.cy >= 0 && m.cy <= m.height)) problems.push(`${s.id}: cy outside [0, height]`);
      if (!(m.near > 0)) problems.push(`${s.id}: near plane must be > 0`);
    } else {
      const m = s.model as LidarModelDoc;
      if (!(m.range_sigma >= 0)) problems.push(`${s.id}: range_sigma must be >= 0`);
      if (!(m.dropout >= 0 && m.dropout < 1)) problems.push(`${s.id}: dropout outside [0, 1)`);
    }
    if (s.extrinsic.translation.length !== 3) problems.push(`${s.id}: translation needs 3 components`);
    if (s.extrinsic.rotation_wxyz.length !== 4) problems.push(`${s.id}: rotation needs 4 components`);
  }
  return problems;
}

export class RigEditor {
  readonly element: HTMLElement;
  onSave: (rig: RigDoc) => void = () => {};

  private doc: RigDoc = { sensors: [] };
  private readonly errorList: HTMLElement;

  constructor() {
    const doc = globalThis.document;
    this.element = doc.createElement("form");
    this.element.className = "rig-editor";
    this.element.addEventListener("submit", (ev) => ev.preventDefault());
    this.errorList = doc.createElement("ul");
    this.errorList.className = "rig-errors";
  }

  load(rig: RigDoc): void {
    this.doc = structuredClone(rig);
    const doc = globalThis.document;
    this.element.innerHTML = "";
    for (const sensor of this.doc.sensors) {
      this.element.appendChild(this.sensorFieldset(sensor));
    }
    const save = doc.createElement("button");
    save.type = "button";
    save.textContent = "save rig";
    save.className = "rig-save";
    save.addEventListener("click", () => this.save());
    this.element.appendChild(save);
    this.element.appendChild(this.errorList);
  }

  /** Current document with form edits applied. */
  collect(): RigDoc {
    return structuredClone(this.doc);
  }

  save(): void {
    const rig = this.collect();
    const problems = validateRig(rig);
    this.errorList.innerHTML = "";
    if (problems.length) {
      for (const p of problems) {
        const li = globalThis.document.createElement("li");
        li.textContent = p;
        this.errorList.appendChild(li);
      }
      return;
    }
    this.onSave(rig);
  }

  /** Form input for one model field, or null if absent (lidar vs camera). */
  input(sensorId: string, field: string): HTMLInputElement | null {
    return this.element.querySelector(`input[name="${sensorId}.${field}"]`);
  }

  setPreset(sensorId: string, preset: string): void {
    const chosen = CAMERA_PRESETS[preset];
    const sensor = this.doc.sensors.find((s) => s.id === sensorId);
    if (!chosen || !sensor || !isCameraModel(sensor)) return;
    Object.assign(sensor.model, chosen);
    for (const f of CAMERA_FIELDS) {
      const el = this.input(sensorId, f);
      if (el) el.value = String(sensor.model[f]);
    }
  }

  private sensorFieldset(sensor: RigSensorDoc): HTMLElement {
    const doc = globalThis.document;
    const box = doc.createElement("fieldset");
    box.setAttribute("data-sensor-id", sensor.id);
    const legend = doc.createElement("legend");
    legend.textContent = `${sensor.id} (${sensor.kind})`;
    box.appendChild(legend);

    if (isCameraModel(sensor)) {
      for (const f of CAMERA_FIELDS) {
        box.appendChild(this.numberField(sensor.id, f, sensor.model[f], (v) => {
          (sensor.model as CameraModelDoc)[f] = v;
        }));
      }
      const preset = doc.createElement("select");
      preset.name = `${sensor.id}.preset`;
      preset.innerHTML =
        `<option value="">preset…</option>` +
        Object.keys(CAMERA_PRESETS)
          .map((k) => `<option value="${k}">${k}</option>`)
          .join("");
      preset.addEventListener("change", () => {
        if (preset.value) this.setPreset(sensor.id, preset.value);
      });
      box.appendChild(preset);
    } else {
      const model = sensor.model as LidarModelDoc;
      for (const f of LIDAR_FIELDS) {
        box.appendChild(this.numberField(sensor.id, f, model[f], (v) => {
          model[f] = v;
        }));
      }
    }

    for (const [axis, idx] of [["tx", 0], ["ty", 1], ["tz", 2]] as const) {
      box.appendChild(
        this.numberField(sensor.id, axis, sensor.extrinsic.translation[idx], (v) => {
          sensor.extrinsic.translation[idx] = v;
        }),
      );
    }
    return box;
  }

  private numberField(
    sensorId: string,
    field: string,
    value: number,
    apply: (v: number) => void,
  ): HTMLElement {
    const doc = globalThis.document;
    const label = doc.createElement("label");
    label.textContent = field;
    const input = doc.createElement("input");
    input.type = "number";
    input.step = "any";
    input.name = `${sensorId}.${field}`;
    input.value = String(value);
    input.addEventListener("change", () => {
      const v = Number(input.value);
      if (Number.isFinite(v)) apply(v);
    });
    label.appendChild(input);
    return label;
  }
}
