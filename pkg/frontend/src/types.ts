// JSON document shapes exchanged with the oasim HTTP service.

export interface SensorInfo {
  id: string;
  kind: string;
}

export interface RouteStepDoc {
  lane_id: string;
  mode: string;
  change_at: number | null;
  points: number[][];
}

export interface RouteDoc {
  steps: RouteStepDoc[];
  total_cost: number;
  length: number;
  duration: number;
}

export interface SessionDoc {
  session_id: string;
  revision: number;
  refs: Record<string, string>;
  lane_count: number;
  traffic_count: number;
  traffic_preset: string | null;
  sensors: SensorInfo[];
  route: RouteDoc | null;
}

export interface MapLane {
  id: string;
  points: number[][];
  width: number;
  speed_limit: number;
  successors: string[];
  left: string | null;
  right: string | null;
  length: number;
}

export interface MapDoc {
  lanes: MapLane[];
  bounds: [[number, number], [number, number]];
  revision: number;
}

export interface PoseDoc {
  translation: number[];
  rotation_wxyz: number[];
}

export interface CameraModelDoc {
  width: number;
  height: number;
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  near: number;
}

export interface LidarModelDoc {
  elevations: number[];
  azimuth_step: number;
  spin_period: number;
  max_range: number;
  range_sigma: number;
  dropout: number;
}

export interface RigSensorDoc {
  id: string;
  kind: "camera" | "lidar";
  extrinsic: PoseDoc;
  model: CameraModelDoc | LidarModelDoc;
}

export interface RigDoc {
  sensors: RigSensorDoc[];
}

export type JobState = "queued" | "running" | "done" | "failed";

export interface JobDoc {
  job_id: string;
  state: JobState;
  progress: number;
  out_dir: string;
  error: { code: string; message: string } | null;
  manifest: Record<string, unknown> | null;
}

export interface ManeuverBody {
  kind: string;
  trigger_s: number;
  successor?: string | null;
  speed?: number | null;
}

export interface TrafficBody {
  preset: string;
  seed?: number;
  count?: number | null;
}

export interface JobBody {
  scenario: string;
  out_dir?: string;
  frame_rate?: number;
  duration?: number;
  seed?: number;
}

export function isCameraModel(s: RigSensorDoc): s is RigSensorDoc & { model: CameraModelDoc } {
  return s.kind === "camera";
}
