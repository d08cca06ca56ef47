"""Simulated driving data toolkit: implicit-surface scenes, lane-graph
routing, traffic, sensor simulation, and dataset generation."""

from .errors import OasimError
from .geometry import Pose
from .hdmap import LaneGraph, Maneuver, Route, apply_maneuver, load_hdmap, plan_route
from .pipeline import GENERATOR_VERSION as __version__
from .pipeline import ExportRequest, ingest, run_export
from .render import PointCloud, RenderFrame, extract_annotations, render_camera, render_lidar
from .scene import Asset, AssetLibrary, SceneSnapshot, compose, load_scene, sphere_trace
from .sensors import CameraModel, LidarModel, Sensor, SensorRig, load_rig
from .trajectory import Trajectory, generate_trajectory
from .traffic import TrafficWorld, spawn

__all__ = [
    "OasimError", "Pose",
    "LaneGraph", "Maneuver", "Route", "apply_maneuver", "load_hdmap", "plan_route",
    "ExportRequest", "ingest", "run_export",
    "PointCloud", "RenderFrame", "extract_annotations", "render_camera", "render_lidar",
    "Asset", "AssetLibrary", "SceneSnapshot", "compose", "load_scene", "sphere_trace",
    "CameraModel", "LidarModel", "Sensor", "SensorRig", "load_rig",
    "Trajectory", "generate_trajectory",
    "TrafficWorld", "spawn",
    "__version__",
]
