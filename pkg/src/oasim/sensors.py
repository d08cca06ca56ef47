"""Camera and LiDAR models, preset library, and rig composition.

Camera frame: +z forward, +x right, +y down. LiDAR frame: +x forward,
+z up, azimuth counter-clockwise from +x, elevation up from the xy plane.
All angles are radians in memory; rig files store degrees.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BehindCamera, Invalid, OutOfImage, UnknownSensor
from .geometry import Pose

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CameraModel:
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    near: float = 0.1

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise Invalid("camera size must be positive")
        if self.fx <= 0 or self.fy <= 0:
            raise Invalid("camera focal lengths must be positive")
        if not (0 <= self.cx < self.width) or not (0 <= self.cy < self.height):
            raise Invalid("camera principal point must lie inside the image")
        if self.near <= 0:
            raise Invalid("camera near plane must be positive")

    @staticmethod
    def centered(width: int, height: int, fx: float, fy: float, near: float = 0.1):
        return CameraModel(width, height, fx, fy, width / 2.0, height / 2.0, near)

    def to_dict(self):
        return {"width": self.width, "height": self.height, "fx": self.fx,
                "fy": self.fy, "cx": self.cx, "cy": self.cy, "near": self.near}

    @staticmethod
    def from_dict(doc):
        return CameraModel(int(doc["width"]), int(doc["height"]),
                           float(doc["fx"]), float(doc["fy"]),
                           float(doc["cx"]), float(doc["cy"]),
                           float(doc.get("near", 0.1)))


@dataclass(frozen=True)
class LidarModel:
    elevations: tuple
    azimuth_step: float
    spin_period: float
    max_range: float
    range_sigma: float = 0.0
    dropout: float = 0.0

    def __post_init__(self):
        elevs = tuple(float(e) for e in self.elevations)
        object.__setattr__(self, "elevations", elevs)
        if not elevs or any(b <= a for a, b in zip(elevs, elevs[1:])):
            raise Invalid("beam elevations must be strictly increasing")
        if elevs[0] < -math.pi / 2 or elevs[-1] > math.pi / 2:
            raise Invalid("beam elevations must lie in [-pi/2, pi/2]")
        if self.azimuth_step <= 0:
            raise Invalid("azimuth step must be positive")
        cols = TWO_PI / self.azimuth_step
        if abs(cols - round(cols)) > 1e-9:
            raise Invalid("azimuth step must divide 2*pi")
        if self.spin_period <= 0:
            raise Invalid("spin period must be positive")
        if self.max_range <= 0:
            raise Invalid("max range must be positive")
        if self.range_sigma < 0:
            raise Invalid("range noise sigma must be non-negative")
        if not (0 <= self.dropout < 1):
            raise Invalid("dropout probability must be in [0, 1)")

    @property
    def beam_count(self) -> int:
        return len(self.elevations)

    @property
    def columns(self) -> int:
        return int(round(TWO_PI / self.azimuth_step))

    def to_dict(self):
        return {"elevations": list(self.elevations), "azimuth_step": self.azimuth_step,
                "spin_period": self.spin_period, "max_range": self.max_range,
                "range_sigma": self.range_sigma, "dropout": self.dropout}

    @staticmethod
    def from_dict(doc):
        return LidarModel(tuple(doc["elevations"]), float(doc["azimuth_step"]),
                          float(doc["spin_period"]), float(doc["max_range"]),
                          float(doc.get("range_sigma", 0.0)), float(doc.get("dropout", 0.0)))


@dataclass(frozen=True)
class Sensor:
    sensor_id: str
    kind: str  # camera | lidar
    model: object
    extrinsic: Pose

    def __post_init__(self):
        if self.kind not in ("camera", "lidar"):
            raise Invalid(f"unknown sensor kind {self.kind!r}")
        want = CameraModel if self.kind == "camera" else LidarModel
        if not isinstance(self.model, want):
            raise Invalid(f"sensor {self.sensor_id}: model does not match kind")


class SensorRig:
    def __init__(self, sensors):
        sensors = list(sensors)
        ids = [s.sensor_id for s in sensors]
        if len(set(ids)) != len(ids):
            raise Invalid("sensor ids must be unique")
        self.sensors = sensors
        self._by_id = {s.sensor_id: s for s in sensors}

    def get(self, sensor_id: str) -> Sensor:
        try:
            return self._by_id[sensor_id]
        except KeyError:
            raise UnknownSensor(f"no sensor {sensor_id!r} in rig") from None

    def cameras(self):
        return [s for s in self.sensors if s.kind == "camera"]

    def lidars(self):
        return [s for s in self.sensors if s.kind == "lidar"]

    def __contains__(self, sensor_id):
        return sensor_id in self._by_id


def _linear_elevations(lo_deg: float, hi_deg: float, n: int) -> tuple:
    return tuple(math.radians(lo_deg + (hi_deg - lo_deg) * i / (n - 1)) for i in range(n))


CAMERA_PRESETS = {
    "wide": CameraModel.centered(1920, 1080, 1000.0, 1000.0),
    "tele": CameraModel.centered(1920, 1080, 4000.0, 4000.0),
}

LIDAR_PRESETS = {
    "spin-32": LidarModel(_linear_elevations(-25.0, 15.0, 32),
                          math.radians(0.2), 0.1, 120.0),
    "spin-64": LidarModel(_linear_elevations(-25.0, 15.0, 64),
                          math.radians(0.2), 0.1, 120.0),
}


def pixel_ray(cam: CameraModel, u: float, v: float) -> np.ndarray:
    """Unit ray through the given pixel position, camera frame."""
    if not (0 <= u < cam.width) or not (0 <= v < cam.height):
        raise OutOfImage(f"pixel ({u}, {v}) outside {cam.width}x{cam.height}")
    x = (u - cam.cx) / cam.fx
    y = (v - cam.cy) / cam.fy
    n = math.sqrt(x * x + y * y + 1.0)
    return np.array([x / n, y / n, 1.0 / n])


def project(cam: CameraModel, p) -> tuple:
    p = np.asarray(p, dtype=np.float64).reshape(3)
    if p[2] < cam.near:
        raise BehindCamera(f"point z={p[2]:.4f} in front of near plane {cam.near}")
    u = cam.fx * p[0] / p[2] + cam.cx
    v = cam.fy * p[1] / p[2] + cam.cy
    return (u, v)


def lidar_rays(lidar: LidarModel, t0: float):
    """Timed rays of one sweep, column-major: all beams of column k share
    azimuth k*step and time t0 + k*period/columns.

    Returns (times, elevations, azimuths) flat arrays of length
    beams*columns, ordered column-by-column with beams innermost.
    """
    cols = lidar.columns
    beams = lidar.beam_count
    k = np.repeat(np.arange(cols), beams)
    az = k * lidar.azimuth_step
    times = t0 + k * (lidar.spin_period / cols)
    elev = np.tile(np.asarray(lidar.elevations), cols)
    return times, elev, az


def ray_dirs_from_angles(elev: np.ndarray, az: np.ndarray) -> np.ndarray:
    """Sensor-frame unit directions for (elevation, azimuth) pairs."""
    ce = np.cos(elev)
    out = np.empty((elev.shape[0], 3))
    out[:, 0] = ce * np.cos(az)
    out[:, 1] = ce * np.sin(az)
    out[:, 2] = np.sin(elev)
    return out


def sensor_pose_world(rig: SensorRig, vehicle_pose: Pose, sensor_id: str) -> Pose:
    return vehicle_pose.compose(rig.get(sensor_id).extrinsic)


# rotation taking camera axes (+z fwd, +x right, +y down) to vehicle axes
# (+x fwd, +y left, +z up); columns are the camera basis in vehicle frame
FRONT_CAMERA_ROTATION = np.array([
    [0.0, 0.0, 1.0],
    [-1.0, 0.0, 0.0],
    [0.0, -1.0, 0.0],
])


def camera_look_pose(position, yaw: float, pitch: float = 0.0) -> Pose:
    """World pose of a camera at `position` heading `yaw`, pitched up by
    `pitch` (radians, positive raises the view)."""
    from .geometry import quat_from_matrix

    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    fwd = np.array([cy * cp, sy * cp, sp])
    right = np.array([sy, -cy, 0.0])
    down = np.array([
        fwd[1] * right[2] - fwd[2] * right[1],
        fwd[2] * right[0] - fwd[0] * right[2],
        fwd[0] * right[1] - fwd[1] * right[0],
    ])
    rot = np.stack([right, down, fwd], axis=1)
    return Pose(np.asarray(position, dtype=np.float64).reshape(3), quat_from_matrix(rot))


# ---------------------------------------------------------------------------
# rig.json: angles in degrees on disk, radians in memory
# ---------------------------------------------------------------------------

def rig_to_dict(rig: SensorRig) -> dict:
    sensors = []
    for s in rig.sensors:
        entry = {
            "id": s.sensor_id,
            "kind": s.kind,
            "extrinsic": s.extrinsic.to_dict(),
        }
        if s.kind == "camera":
            entry["model"] = s.model.to_dict()
        else:
            m = s.model.to_dict()
            m["elevations"] = [math.degrees(e) for e in s.model.elevations]
            m["azimuth_step"] = math.degrees(s.model.azimuth_step)
            entry["model"] = m
        sensors.append(entry)
    return {"sensors": sensors}


def rig_from_dict(doc: dict) -> SensorRig:
    try:
        entries = doc["sensors"]
    except (TypeError, KeyError):
        raise Invalid("rig document must carry a 'sensors' list") from None
    sensors = []
    for e in entries:
        try:
            kind = e["kind"]
            m = dict(e["model"])
            if kind == "lidar":
                m["elevations"] = [math.radians(v) for v in m["elevations"]]
                m["azimuth_step"] = math.radians(m["azimuth_step"])
                model = LidarModel.from_dict(m)
            elif kind == "camera":
                model = CameraModel.from_dict(m)
            else:
                raise Invalid(f"unknown sensor kind {kind!r}")
            sensors.append(Sensor(e["id"], kind, model, Pose.from_dict(e["extrinsic"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise Invalid(f"bad sensor entry: {exc}") from None
    return SensorRig(sensors)


def load_rig(path: Path) -> SensorRig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise Invalid(f"cannot read rig file {path}: {exc}") from None
    return rig_from_dict(doc)


def save_rig(rig: SensorRig, path: Path):
    Path(path).write_text(json.dumps(rig_to_dict(rig), indent=2, sort_keys=True) + "\n")
