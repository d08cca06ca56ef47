"""Camera frames, LiDAR sweeps, and ground-truth annotation extraction.

Camera depth/instance channels must be reproducible by a scalar re-coding
of the same math, so the primary-ray path sticks to explicit elementwise
arithmetic. The LiDAR path has no bitwise twin and uses ordinary numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange, TrajectoryGap
from .geometry import Pose, quat_to_matrix, wrap_angle
from .scene import NO_HIT_ID, SceneSnapshot
from .sensors import CameraModel, LidarModel, lidar_rays, ray_dirs_from_angles

RENDER_EPS = 1e-3
RENDER_T_MAX = 1000.0
SKY_COLOR = (0.55, 0.70, 0.90)
# fixed sun: normalize(0.4, 0.2, 1)
_SUN_RAW = (0.4, 0.2, 1.0)
_SUN_N = math.sqrt(_SUN_RAW[0] ** 2 + _SUN_RAW[1] ** 2 + _SUN_RAW[2] ** 2)
SUN_DIR = (_SUN_RAW[0] / _SUN_N, _SUN_RAW[1] / _SUN_N, _SUN_RAW[2] / _SUN_N)


@dataclass
class RenderFrame:
    width: int
    height: int
    rgb: np.ndarray        # (h, w, 3) float in [0, 1]
    depth: np.ndarray      # (h, w) meters, +inf where no hit
    normal: np.ndarray     # (h, w, 3) unit vectors, zeros where no hit
    semantic: np.ndarray   # (h, w) uint16 class ids, 65535 where no hit
    instance: np.ndarray   # (h, w) uint16 instance ids, 65535 where no hit

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.depth)


def render_camera(snapshot: SceneSnapshot, cam: CameraModel,
                  pose: Pose) -> RenderFrame:
    """One primary ray per pixel center, sphere traced against the scene."""
    w, h = cam.width, cam.height
    n = w * h
    u = np.tile(np.arange(w, dtype=np.float64) + 0.5, h)
    v = np.repeat(np.arange(h, dtype=np.float64) + 0.5, w)
    x = (u - cam.cx) / cam.fx
    y = (v - cam.cy) / cam.fy
    nrm = np.sqrt(x * x + y * y + 1.0)
    dcx = x / nrm
    dcy = y / nrm
    dcz = 1.0 / nrm
    m = quat_to_matrix(pose.rotation)
    dirs = np.empty((n, 3))
    dirs[:, 0] = m[0, 0] * dcx + m[0, 1] * dcy + m[0, 2] * dcz
    dirs[:, 1] = m[1, 0] * dcx + m[1, 1] * dcy + m[1, 2] * dcz
    dirs[:, 2] = m[2, 0] * dcx + m[2, 1] * dcy + m[2, 2] * dcz
    origins = np.empty((n, 3))
    origins[:, 0] = pose.translation[0]
    origins[:, 1] = pose.translation[1]
    origins[:, 2] = pose.translation[2]

    t, hit = snapshot.trace_rays(origins, dirs, RENDER_T_MAX, RENDER_EPS)

    depth = np.where(hit, t, np.inf)
    rgb = np.empty((n, 3))
    rgb[:, 0] = SKY_COLOR[0]
    rgb[:, 1] = SKY_COLOR[1]
    rgb[:, 2] = SKY_COLOR[2]
    normal = np.zeros((n, 3))
    semantic = np.full(n, NO_HIT_ID, dtype=np.uint16)
    instance = np.full(n, NO_HIT_ID, dtype=np.uint16)

    if np.any(hit):
        th = t[hit]
        p = np.empty((th.shape[0], 3))
        p[:, 0] = origins[hit, 0] + th * dirs[hit, 0]
        p[:, 1] = origins[hit, 1] + th * dirs[hit, 1]
        p[:, 2] = origins[hit, 2] + th * dirs[hit, 2]
        _, owner = snapshot.eval_with_owner(p)
        nrm_w = snapshot.normal_at(p, owner)
        alb = snapshot.albedo_at(p, owner)
        lam = 0.2 + 0.8 * np.maximum(
            0.0, nrm_w[:, 0] * SUN_DIR[0] + nrm_w[:, 1] * SUN_DIR[1]
            + nrm_w[:, 2] * SUN_DIR[2])
        rgb[hit] = alb * lam[:, None]
        normal[hit] = nrm_w
        semantic[hit] = snapshot.class_of(owner).astype(np.uint16)
        instance[hit] = owner.astype(np.uint16)

    return RenderFrame(
        width=w, height=h,
        rgb=rgb.reshape(h, w, 3),
        depth=depth.reshape(h, w),
        normal=normal.reshape(h, w, 3),
        semantic=semantic.reshape(h, w),
        instance=instance.reshape(h, w),
    )


@dataclass
class PointCloud:
    """Points of one sweep, xyz in the sensor frame at sweep start."""

    xyz: np.ndarray        # (n, 3) float64
    range: np.ndarray      # (n,) noisy range along the ray
    ring: np.ndarray       # (n,) uint16 beam index
    instance: np.ndarray   # (n,) uint16
    timestamp: np.ndarray  # (n,) float64 absolute seconds
    t0: float
    beam_count: int

    def __len__(self):
        return self.xyz.shape[0]


def _pose_fn(source):
    """Normalize trajectory-like / Pose / callable into t -> Pose,
    mapping range errors to TrajectoryGap."""
    if isinstance(source, Pose):
        return lambda t: source
    getter = source.pose_at if hasattr(source, "pose_at") else source

    def fn(t):
        try:
            return getter(t)
        except OutOfRange as exc:
            raise TrajectoryGap(str(exc)) from None
    return fn


def render_lidar(snapshot_at, lidar: LidarModel, vehicle_poses, extrinsic: Pose,
                 t0: float, seed: int, eps: float = RENDER_EPS) -> PointCloud:
    """Simulate one sweep starting at t0.

    snapshot_at: time -> SceneSnapshot (may return one object for the whole
    sweep). The sensor pose is interpolated per column from vehicle_poses
    composed with the extrinsic. Range noise and dropout are drawn once per
    ray from a counter-based generator keyed by the seed, in canonical ray
    order, so results do not depend on evaluation order.
    """
    pose_at = _pose_fn(vehicle_poses)
    times, elev, az = lidar_rays(lidar, t0)
    n = times.shape[0]
    beams = lidar.beam_count
    cols = lidar.columns
    dirs_local = ray_dirs_from_angles(elev, az)
    rings = np.tile(np.arange(beams, dtype=np.uint16), cols)

    origins = np.empty((n, 3))
    dirs = np.empty((n, 3))
    col_snapshots = []
    col_times = t0 + np.arange(cols) * (lidar.spin_period / cols)
    for k in range(cols):
        sensor = pose_at(float(col_times[k])).compose(extrinsic)
        m = quat_to_matrix(sensor.rotation)
        sl = slice(k * beams, (k + 1) * beams)
        dl = dirs_local[sl]
        dirs[sl, 0] = m[0, 0] * dl[:, 0] + m[0, 1] * dl[:, 1] + m[0, 2] * dl[:, 2]
        dirs[sl, 1] = m[1, 0] * dl[:, 0] + m[1, 1] * dl[:, 1] + m[1, 2] * dl[:, 2]
        dirs[sl, 2] = m[2, 0] * dl[:, 0] + m[2, 1] * dl[:, 1] + m[2, 2] * dl[:, 2]
        origins[sl] = sensor.translation
        col_snapshots.append(snapshot_at(float(col_times[k])))

    t = np.full(n, np.inf)
    hit = np.zeros(n, dtype=bool)
    owner = np.zeros(n, dtype=np.int64)
    k = 0
    while k < cols:
        j = k
        while j + 1 < cols and col_snapshots[j + 1] is col_snapshots[k]:
            j += 1
        snap = col_snapshots[k]
        sl = slice(k * beams, (j + 1) * beams)
        t_g, hit_g = snap.trace_rays(origins[sl], dirs[sl], lidar.max_range, eps)
        t[sl] = t_g
        hit[sl] = hit_g
        if np.any(hit_g):
            p_true = origins[sl][hit_g] + t_g[hit_g, None] * dirs[sl][hit_g]
            _, own = snap.eval_with_owner(p_true)
            idx = np.arange(k * beams, (j + 1) * beams)[hit_g]
            owner[idx] = own
        k = j + 1

    # keyed randomness: one normal + one uniform per ray, canonical order
    rng = np.random.Generator(np.random.Philox(seed))
    noise = rng.standard_normal(n) * lidar.range_sigma
    drop = rng.random(n) < lidar.dropout

    r_noisy = t + noise
    keep = hit & ~drop & (r_noisy > 0.0) & (r_noisy <= lidar.max_range)

    p_world = origins[keep] + r_noisy[keep, None] * dirs[keep]
    sensor0 = pose_at(t0).compose(extrinsic)
    inv = sensor0.inverse()
    xyz = inv.transform_points(p_world)

    return PointCloud(
        xyz=xyz,
        range=r_noisy[keep],
        ring=rings[keep],
        instance=owner[keep].astype(np.uint16),
        timestamp=times[keep],
        t0=t0,
        beam_count=beams,
    )


@dataclass
class AgentBox:
    agent_id: int
    class_name: str
    center: np.ndarray  # ego frame
    size: np.ndarray    # asset bbox extents (l, w, h)
    yaw: float          # relative to ego heading
    speed: float


@dataclass
class FrameAnnotations:
    ego_pose: Pose
    boxes: list


def extract_annotations(agent_poses, library, ego_pose: Pose) -> FrameAnnotations:
    """Agent 3D boxes in the ego frame. agent_poses holds world-frame
    (agent id, asset id, Pose, speed) rows; the ego itself is never listed."""
    inv = ego_pose.inverse()
    ego_yaw = ego_pose.yaw
    boxes = []
    for agent_id, asset_id, pose, speed in agent_poses:
        asset = library.get(asset_id)
        center_obj = np.array([0.0, 0.0, asset.bbox[2] / 2.0])
        center_world = pose.transform_point(center_obj)
        boxes.append(AgentBox(
            agent_id=agent_id,
            class_name=asset.class_name,
            center=inv.transform_point(center_world),
            size=asset.bbox.copy(),
            yaw=wrap_angle(pose.yaw - ego_yaw),
            speed=float(speed),
        ))
    return FrameAnnotations(ego_pose=ego_pose, boxes=boxes)
