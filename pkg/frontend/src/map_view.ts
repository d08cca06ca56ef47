// Top-down SVG view of the lane graph: clickable centerlines, route
// highlight, wheel zoom and drag pan.

import type { MapDoc, MapLane, RouteDoc } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

/** World-to-screen mapping that fits the bounds into the viewport with a
 * margin. Screen y points down, world y up, so the y axis flips. */
export function fitTransform(
  bounds: [[number, number], [number, number]],
  viewW: number,
  viewH: number,
  margin = 20,
): ViewTransform {
  const [[minX, minY], [maxX, maxY]] = bounds;
  const spanX = Math.max(maxX - minX, 1e-9);
  const spanY = Math.max(maxY - minY, 1e-9);
  const scale = Math.min((viewW - 2 * margin) / spanX, (viewH - 2 * margin) / spanY);
  return {
    scale,
    offsetX: margin - minX * scale + (viewW - 2 * margin - spanX * scale) / 2,
    offsetY: viewH - margin + minY * scale - (viewH - 2 * margin - spanY * scale) / 2,
  };
}

export function toScreen(tf: ViewTransform, x: number, y: number): [number, number] {
  return [x * tf.scale + tf.offsetX, -y * tf.scale + tf.offsetY];
}

export function pointsAttr(tf: ViewTransform, points: number[][]): string {
  return points
    .map((p) => {
      const [sx, sy] = toScreen(tf, p[0], p[1]);
      return `${round2(sx)},${round2(sy)}`;
    })
    .join(" ");
}

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}

export interface MapSelection {
  start: string | null;
  goal: string | null;
}

export class MapView {
  readonly svg: SVGSVGElement;
  onLaneClick: (laneId: string) => void = () => {};

  private readonly world: SVGGElement;
  private tf: ViewTransform = { scale: 1, offsetX: 0, offsetY: 0 };
  private zoom = 1;
  private panX = 0;
  private panY = 0;
  private dragFrom: [number, number] | null = null;

  constructor(
    readonly width = 640,
    readonly height = 480,
  ) {
    const doc = globalThis.document;
    this.svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    this.svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
    this.svg.setAttribute("class", "map-view");
    this.world = doc.createElementNS(SVG_NS, "g") as SVGGElement;
    this.svg.appendChild(this.world);

    this.svg.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      this.zoom *= ev.deltaY < 0 ? 1.2 : 1 / 1.2;
      this.zoom = Math.min(Math.max(this.zoom, 0.2), 50);
      this.applyViewTransform();
    });
    this.svg.addEventListener("pointerdown", (ev) => {
      this.dragFrom = [ev.clientX, ev.clientY];
    });
    this.svg.addEventListener("pointermove", (ev) => {
      if (!this.dragFrom) return;
      this.panX += ev.clientX - this.dragFrom[0];
      this.panY += ev.clientY - this.dragFrom[1];
      this.dragFrom = [ev.clientX, ev.clientY];
      this.applyViewTransform();
    });
    this.svg.addEventListener("pointerup", () => {
      this.dragFrom = null;
    });
  }

  private applyViewTransform(): void {
    this.world.setAttribute(
      "transform",
      `translate(${this.panX} ${this.panY}) scale(${this.zoom})`,
    );
  }

  render(map: MapDoc, route: RouteDoc | null, selection: MapSelection): void {
    this.tf = fitTransform(map.bounds, this.width, this.height);
    while (this.world.firstChild) this.world.removeChild(this.world.firstChild);
    for (const lane of map.lanes) this.world.appendChild(this.laneGroup(lane, selection));
    if (route) {
      for (const step of route.steps) {
        if (step.points.length < 2) continue;
        const line = this.polyline(step.points, "route");
        line.setAttribute("data-route-lane", step.lane_id);
        this.world.appendChild(line);
      }
    }
  }

  /** Lane ids painted as the current route highlight, in step order. */
  routeLanes(): string[] {
    const out: string[] = [];
    this.world.querySelectorAll("polyline.route").forEach((el) => {
      out.push(el.getAttribute("data-route-lane") ?? "");
    });
    return out;
  }

  private laneGroup(lane: MapLane, selection: MapSelection): SVGGElement {
    const doc = globalThis.document;
    const g = doc.createElementNS(SVG_NS, "g") as SVGGElement;
    g.setAttribute("data-lane-id", lane.id);
    let cls = "lane";
    if (lane.id === selection.start) cls += " selected-start";
    if (lane.id === selection.goal) cls += " selected-goal";
    g.setAttribute("class", cls);

    const visible = this.polyline(lane.points, "lane-line");
    // wide transparent twin so thin lanes are clickable
    const hit = this.polyline(lane.points, "lane-hit");
    hit.setAttribute("stroke-width", String(Math.max(lane.width * this.tf.scale, 10)));
    g.appendChild(visible);
    g.appendChild(hit);
    g.addEventListener("click", () => this.onLaneClick(lane.id));
    return g;
  }

  private polyline(points: number[][], cls: string): SVGPolylineElement {
    const line = globalThis.document.createElementNS(SVG_NS, "polyline") as SVGPolylineElement;
    line.setAttribute("points", pointsAttr(this.tf, points));
    line.setAttribute("class", cls);
    line.setAttribute("fill", "none");
    return line;
  }
}
