"""Built-in content: a demo map/scene/rig/scenario for quick starts, plus
small deterministic fixture scenes used by the test suite and docs."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .geometry import Pose, quat_from_matrix, quat_from_yaw, quat_multiply
from .hdmap import Lane, LaneGraph, save_hdmap
from .scene import Asset, AssetLibrary, BackgroundAlbedo, SceneSnapshot, compose, save_scene
from .sdf import Box, Plane, RoundedBox, Sphere, Union
from .sensors import (CAMERA_PRESETS, FRONT_CAMERA_ROTATION, LIDAR_PRESETS,
                      CameraModel, Sensor, SensorRig, camera_look_pose, save_rig)
from .scenario import Scenario, save_scenario

LANE_WIDTH = 3.5


# ---------------------------------------------------------------------------
# assets
# ---------------------------------------------------------------------------

def demo_assets() -> AssetLibrary:
    car = Asset(
        "car", "vehicle.car",
        Union([
            RoundedBox((0.0, 0.0, 0.5), (2.2, 0.9, 0.35), 0.12),
            RoundedBox((-0.2, 0.0, 1.05), (1.1, 0.8, 0.33), 0.12),
        ]),
        bbox=(4.6, 1.9, 1.5), albedo=(0.70, 0.15, 0.15),
    )
    truck = Asset(
        "truck", "vehicle.truck",
        Union([
            RoundedBox((2.8, 0.0, 1.4), (0.9, 1.2, 1.35), 0.15),
            Box((-0.8, 0.0, 1.7), (2.9, 1.2, 1.45)),
        ]),
        bbox=(7.5, 2.5, 3.2), albedo=(0.20, 0.30, 0.70),
    )
    bus = Asset(
        "bus", "vehicle.bus",
        RoundedBox((0.0, 0.0, 1.55), (5.4, 1.2, 1.4), 0.3),
        bbox=(11.0, 2.5, 3.0), albedo=(0.80, 0.70, 0.20),
    )
    return AssetLibrary([car, truck, bus])


def slab_asset() -> Asset:
    """2 m wide calibration slab used in focal-length comparisons."""
    return Asset("slab", "vehicle.car", Box((0.0, 0.0, 1.0), (1.0, 1.0, 1.0)),
                 bbox=(2.0, 2.0, 2.0), albedo=(0.9, 0.45, 0.1))


# ---------------------------------------------------------------------------
# fixture scenes
# ---------------------------------------------------------------------------

def fixture_scene() -> SceneSnapshot:
    """Street canyon: ground, two tall side walls, an end wall, a sphere
    landmark and two parked vehicles. Depth varies laterally almost
    everywhere, which render tests rely on."""
    background = [
        Plane((0.0, 0.0, 1.0), 0.0),
        Box((35.0, 10.0, 15.0), (85.0, 1.0, 15.0)),    # left wall, face at y=9
        Box((35.0, -10.0, 15.0), (85.0, 1.0, 15.0)),   # right wall, face at y=-9
        Box((121.0, 0.0, 15.0), (1.0, 14.0, 15.0)),    # end wall across the canyon
        Sphere((25.0, 4.0, 2.0), 2.0),
    ]
    albedo = BackgroundAlbedo(bands=[
        (0.04, (0.24, 0.24, 0.26)),
        (1e9, (0.58, 0.52, 0.46)),
    ])
    lib = demo_assets()
    instances = [
        (1, "car", Pose.from_xyz_yaw(18.0, -2.0, 0.0, 0.15)),
        (2, "truck", Pose.from_xyz_yaw(35.0, 3.0, 0.0, 3.04)),
    ]
    return compose(Union(background), albedo, instances, lib)


def fixture_camera() -> CameraModel:
    return CameraModel.centered(640, 480, 400.0, 400.0)


def fixture_camera_pose() -> Pose:
    return camera_look_pose((0.0, 0.0, 1.6), 0.0, 0.0)


def focal_scene() -> SceneSnapshot:
    """Flat ground with a single slab whose near face is 40 m from the origin."""
    lib = AssetLibrary([slab_asset()])
    return compose(Plane((0.0, 0.0, 1.0), 0.0),
                   BackgroundAlbedo(constant=(0.3, 0.3, 0.3)),
                   [(1, "slab", Pose.from_xyz_yaw(41.0, 0.0, 0.0, 0.0))], lib)


def plane_scene() -> SceneSnapshot:
    return compose(Plane((0.0, 0.0, 1.0), 0.0),
                   BackgroundAlbedo(constant=(0.3, 0.3, 0.3)),
                   [], AssetLibrary())


# ---------------------------------------------------------------------------
# demo map: two concentric counter-clockwise ring roads (inner ring is the
# left neighbor of the outer), an exit spur forking off the inner ring, and
# one disconnected service lane
# ---------------------------------------------------------------------------

_R_INNER = 60.0
_R_OUTER = _R_INNER + LANE_WIDTH


def _arc(radius: float, deg0: float, deg1: float, step_deg: float = 2.0) -> np.ndarray:
    n = int(round((deg1 - deg0) / step_deg))
    ang = np.radians(deg0 + step_deg * np.arange(n + 1))
    return np.stack([radius * np.cos(ang), radius * np.sin(ang),
                     np.zeros(n + 1)], axis=1)


def demo_map() -> LaneGraph:
    lanes = []
    for i in range(4):
        d0, d1 = 90.0 * i, 90.0 * (i + 1)
        nxt_a = f"ring-a-{(i + 1) % 4}"
        nxt_b = f"ring-b-{(i + 1) % 4}"
        succ_a = [nxt_a, "exit-0"] if i == 1 else [nxt_a]
        lanes.append(Lane(f"ring-a-{i}", _arc(_R_INNER, d0, d1), LANE_WIDTH,
                          15.0, successors=succ_a, right=f"ring-b-{i}"))
        lanes.append(Lane(f"ring-b-{i}", _arc(_R_OUTER, d0, d1), LANE_WIDTH,
                          15.0, successors=[nxt_b], left=f"ring-a-{i}"))
    # exit spur: leaves the inner ring where it crosses the -x axis, heading -y
    y = np.arange(0.0, 80.0 + 1e-9, 2.0)
    spur0 = np.stack([np.full(len(y), -_R_INNER), -y, np.zeros(len(y))], axis=1)
    spur1 = spur0 + np.array([0.0, -80.0, 0.0])
    lanes.append(Lane("exit-0", spur0, LANE_WIDTH, 10.0, successors=["exit-1"]))
    lanes.append(Lane("exit-1", spur1, LANE_WIDTH, 10.0))
    # disconnected service lane, reachable from nowhere
    y = np.arange(0.0, 50.0 + 1e-9, 2.0)
    lanes.append(Lane("depot-0", np.stack([np.full(len(y), 200.0), y,
                                           np.zeros(len(y))], axis=1),
                      LANE_WIDTH, 10.0))
    return LaneGraph(lanes)


def demo_scene() -> SceneSnapshot:
    background = [
        Plane((0.0, 0.0, 1.0), 0.0),
        Box((0.0, 0.0, 1.5), (38.0, 38.0, 1.5)),        # central island
        Box((0.0, 85.0, 5.0), (20.0, 6.0, 5.0)),
        Box((-85.0, 0.0, 4.0), (6.0, 20.0, 4.0)),
        Box((40.0, -85.0, 6.0), (25.0, 6.0, 6.0)),
        Sphere((75.0, 75.0, 3.0), 3.0),
    ]
    albedo = BackgroundAlbedo(bands=[
        (0.05, (0.23, 0.23, 0.25)),
        (3.2, (0.30, 0.45, 0.25)),
        (1e9, (0.60, 0.55, 0.50)),
    ])
    lib = demo_assets()
    instances = [
        (1, "car", Pose.from_xyz_yaw(58.9, -34.0, 0.0, 1.05)),
        (2, "truck", Pose.from_xyz_yaw(-40.0, 80.0, 0.0, 0.0)),
    ]
    return compose(Union(background), albedo, instances, lib)


def demo_rig() -> SensorRig:
    front_q = quat_from_matrix(FRONT_CAMERA_ROTATION)
    rear_q = quat_multiply(quat_from_yaw(math.pi), front_q)
    cam = CameraModel.centered(480, 270, 250.0, 250.0)
    return SensorRig([
        Sensor("cam_front", "camera", cam,
               Pose(np.array([1.5, 0.0, 1.4]), front_q)),
        Sensor("cam_rear", "camera", cam,
               Pose(np.array([-1.5, 0.0, 1.4]), rear_q)),
        Sensor("lidar_top", "lidar", LIDAR_PRESETS["spin-32"],
               Pose(np.array([0.0, 0.0, 2.0]), np.array([1.0, 0.0, 0.0, 0.0]))),
    ])


def demo_scenario() -> Scenario:
    return Scenario(
        map_ref="map.json", scene_ref="scene.json", rig_ref="rig.json",
        seed=7, start_lane="ring-a-0", goal_lane="ring-a-3",
        preset="few", frame_rate=2.0, duration=5.0,
    )


def write_demo(out_dir: Path) -> dict:
    """Write map.json, scene.json, rig.json and scenario.json into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "map": out_dir / "map.json",
        "scene": out_dir / "scene.json",
        "rig": out_dir / "rig.json",
        "scenario": out_dir / "scenario.json",
    }
    save_hdmap(demo_map(), paths["map"])
    save_scene(demo_scene(), paths["scene"])
    save_rig(demo_rig(), paths["rig"])
    save_scenario(demo_scenario(), paths["scenario"])
    return paths
