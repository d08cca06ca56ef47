// Keyboard bindings: arrow keys edit the route, digits pick a branch,
// space stops, WASD+QE fly the free preview camera.

import type { ManeuverBody, MapDoc, RouteDoc } from "./types.js";

/** Arc length the ego has covered at sim time t. The console approximates
 * with constant progress along the route; the service validates triggers
 * against the true extent either way. */
export function egoArcLength(route: RouteDoc, t: number): number {
  if (route.duration <= 0) return 0;
  const frac = Math.min(Math.max(t / route.duration, 0), 1);
  return route.length * frac;
}

/** Successor id the digit key picks at the next branch on the route, or
 * null when there is no such choice. */
export function turnSuccessor(
  map: MapDoc,
  route: RouteDoc,
  triggerS: number,
  digit: number,
): string | null {
  const byId = new Map(map.lanes.map((l) => [l.id, l]));
  let offset = 0;
  for (const step of route.steps) {
    const lane = byId.get(step.lane_id);
    if (!lane) continue;
    const end = offset + lane.length;
    // the branch decision sits at the lane's end
    if (end >= triggerS && lane.successors.length >= 2) {
      return lane.successors[digit - 1] ?? null;
    }
    offset = end;
  }
  return null;
}

export interface KeyContext {
  map: MapDoc;
  route: RouteDoc;
  simTime: number;
}

/** Maneuver for a key press, or null when the key is not a maneuver key.
 * Digit keys resolve the successor client-side so a bad choice surfaces
 * immediately; unresolvable digits return a maneuver with successor null
 * and the service rejects it. */
export function maneuverForKey(key: string, ctx: KeyContext): ManeuverBody | null {
  const trigger = egoArcLength(ctx.route, ctx.simTime);
  if (key === "ArrowLeft") return { kind: "lane-change-left", trigger_s: trigger };
  if (key === "ArrowRight") return { kind: "lane-change-right", trigger_s: trigger };
  if (key === " ") return { kind: "stop", trigger_s: trigger };
  if (/^[1-9]$/.test(key)) {
    const successor = turnSuccessor(ctx.map, ctx.route, trigger, Number(key));
    return { kind: "turn-select", trigger_s: trigger, successor };
  }
  return null;
}

export interface FreeCameraState {
  x: number;
  y: number;
  z: number;
  yaw: number; // degrees, service convention
  pitch: number;
}

const MOVE_STEP = 5.0;
const TURN_STEP = 15.0;

/** New camera state after a fly key, or null for non-camera keys.
 * W/S move along the view heading, A/D strafe, Q/E descend/climb. */
export function moveFreeCamera(state: FreeCameraState, key: string): FreeCameraState | null {
  const rad = (state.yaw * Math.PI) / 180;
  const fwd = [Math.cos(rad), Math.sin(rad)];
  const left = [-Math.sin(rad), Math.cos(rad)];
  switch (key.toLowerCase()) {
    case "w":
      return { ...state, x: state.x + fwd[0] * MOVE_STEP, y: state.y + fwd[1] * MOVE_STEP };
    case "s":
      return { ...state, x: state.x - fwd[0] * MOVE_STEP, y: state.y - fwd[1] * MOVE_STEP };
    case "a":
      return { ...state, x: state.x + left[0] * MOVE_STEP, y: state.y + left[1] * MOVE_STEP };
    case "d":
      return { ...state, x: state.x - left[0] * MOVE_STEP, y: state.y - left[1] * MOVE_STEP };
    case "q":
      return { ...state, z: state.z - MOVE_STEP };
    case "e":
      return { ...state, z: state.z + MOVE_STEP };
    case "j":
      return { ...state, yaw: state.yaw + TURN_STEP };
    case "l":
      return { ...state, yaw: state.yaw - TURN_STEP };
    default:
      return null;
  }
}
