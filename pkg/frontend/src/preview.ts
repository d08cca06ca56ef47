// Render preview panel. One in-flight request at a time, latest wins; the
// displayed image and the footer revision always come from the same reply.

import type { ConsoleApi, PreviewParams, PreviewResult } from "./api.js";
import type { FreeCameraState } from "./keyboard.js";
import type { RigDoc } from "./types.js";
import { isCameraModel } from "./types.js";

export const PREVIEW_WIDTH = 480;

/** Query for a rig camera at reduced resolution. The focals are sent
 * explicitly, scaled to the preview width, so the request names the exact
 * model it expects; a rig edit is visible in the next URL. */
export function cameraPreviewParams(
  rig: RigDoc,
  sensorId: string,
  t: number,
): PreviewParams {
  const sensor = rig.sensors.find((s) => s.id === sensorId);
  if (!sensor || !isCameraModel(sensor)) return { sensor: sensorId, t };
  const m = sensor.model;
  const w = Math.min(m.width, PREVIEW_WIDTH);
  const h = Math.max(1, Math.round((m.height * w) / m.width));
  return {
    sensor: sensorId,
    t,
    w,
    fx: (m.fx * w) / m.width,
    fy: (m.fy * h) / m.height,
  };
}

export function freePreviewParams(cam: FreeCameraState, t: number): PreviewParams {
  return {
    sensor: "free",
    t,
    x: cam.x,
    y: cam.y,
    z: cam.z,
    yaw: cam.yaw,
    pitch: cam.pitch,
  };
}

export class PreviewPanel {
  readonly img: HTMLImageElement;
  lastParams: PreviewParams | null = null;
  lastRevision = 0;
  onError: (message: string) => void = () => {};

  private inflight: AbortController | null = null;
  private objectUrl: string | null = null;

  constructor(private readonly api: ConsoleApi) {
    this.img = globalThis.document.createElement("img");
    this.img.className = "preview-image";
    this.img.alt = "render preview";
  }

  /** Fetch and display a preview; aborts any in-flight request first. */
  async request(sessionId: string, params: PreviewParams): Promise<PreviewResult | null> {
    this.inflight?.abort();
    const ctrl = new AbortController();
    this.inflight = ctrl;
    this.lastParams = params;
    try {
      const result = await this.api.fetchPreview(sessionId, params, ctrl.signal);
      if (ctrl.signal.aborted) return null;
      this.show(result);
      return result;
    } catch (err) {
      if (ctrl.signal.aborted) return null;
      this.onError(err instanceof Error ? err.message : String(err));
      return null;
    } finally {
      if (this.inflight === ctrl) this.inflight = null;
    }
  }

  private show(result: PreviewResult): void {
    this.lastRevision = result.revision;
    const urlApi = globalThis.URL as typeof URL & {
      createObjectURL?: (b: Blob) => string;
      revokeObjectURL?: (u: string) => void;
    };
    if (typeof urlApi.createObjectURL === "function") {
      if (this.objectUrl) urlApi.revokeObjectURL?.(this.objectUrl);
      this.objectUrl = urlApi.createObjectURL(result.blob);
      this.img.src = this.objectUrl;
    }
    this.img.setAttribute("data-revision", String(result.revision));
  }
}
