"""On-disk artifact formats: PNG images, packed point-cloud records with a
JSON header sidecar, and JSON-lines annotations/poses."""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import Invalid
from .render import FrameAnnotations, PointCloud

# packed little-endian point record, 28 bytes
CLOUD_DTYPE = np.dtype([
    ("x", "<f4"), ("y", "<f4"), ("z", "<f4"), ("range", "<f4"),
    ("ring", "<u2"), ("instance", "<u2"), ("timestamp", "<f8"),
])

DEPTH_SCALE = 1000.0  # millimeters in the 16-bit depth PNG; 0 = no hit


def json_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def save_rgb_png(rgb: np.ndarray, path: Path):
    """rgb floats in [0,1], shape (h, w, 3)."""
    q = np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(q, mode="RGB").save(Path(path), format="PNG")


def rgb_png_bytes(rgb: np.ndarray) -> bytes:
    q = np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(q, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def load_rgb_png(path: Path) -> np.ndarray:
    arr = np.asarray(Image.open(Path(path)).convert("RGB"), dtype=np.float64)
    return arr / 255.0


def save_depth_png(depth: np.ndarray, path: Path):
    """Depth in meters to 16-bit millimeters; invalid (non-finite) pixels
    and anything past the encodable range become the 0 sentinel."""
    mm = np.where(np.isfinite(depth), np.round(depth * DEPTH_SCALE), 0.0)
    mm = np.where((mm < 1.0) | (mm > 65535.0), 0.0, mm).astype(np.uint16)
    Image.fromarray(mm).save(Path(path), format="PNG")


def load_depth_png(path: Path):
    """Returns (depth meters with +inf at the sentinel, validity mask)."""
    arr = np.asarray(Image.open(Path(path)), dtype=np.uint16)
    valid = arr > 0
    depth = np.where(valid, arr.astype(np.float64) / DEPTH_SCALE, np.inf)
    return depth, valid


def save_cloud(cloud: PointCloud, bin_path: Path, header_path: Path):
    n = len(cloud)
    rec = np.empty(n, dtype=CLOUD_DTYPE)
    rec["x"] = cloud.xyz[:, 0]
    rec["y"] = cloud.xyz[:, 1]
    rec["z"] = cloud.xyz[:, 2]
    rec["range"] = cloud.range
    rec["ring"] = cloud.ring
    rec["instance"] = cloud.instance
    rec["timestamp"] = cloud.timestamp
    rec.tofile(Path(bin_path))
    header = {
        "count": int(n),
        "t0": float(cloud.t0),
        "beam_count": int(cloud.beam_count),
        "record_size": int(CLOUD_DTYPE.itemsize),
        "byte_order": "little",
        "fields": [
            {"name": name, "dtype": str(CLOUD_DTYPE[name])}
            for name in CLOUD_DTYPE.names
        ],
        "file": Path(bin_path).name,
    }
    Path(header_path).write_text(json_dumps(header) + "\n")


def load_cloud(bin_path: Path, header_path: Path) -> PointCloud:
    try:
        header = json.loads(Path(header_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise Invalid(f"cannot read cloud header {header_path}: {exc}") from None
    rec = np.fromfile(Path(bin_path), dtype=CLOUD_DTYPE)
    if rec.shape[0] != header["count"]:
        raise Invalid(f"cloud {bin_path}: {rec.shape[0]} records, header says {header['count']}")
    xyz = np.stack([rec["x"], rec["y"], rec["z"]], axis=1).astype(np.float64)
    return PointCloud(
        xyz=xyz,
        range=rec["range"].astype(np.float64),
        ring=rec["ring"].copy(),
        instance=rec["instance"].copy(),
        timestamp=rec["timestamp"].copy(),
        t0=float(header["t0"]),
        beam_count=int(header["beam_count"]),
    )


def annotations_line(ann: FrameAnnotations, frame_index: int, time: float,
                     instance_ids: dict | None = None) -> str:
    """One frame of 3D boxes as a JSON line; instance_ids optionally maps
    agent id to the composed scene instance id of the same frame."""
    boxes = []
    for b in ann.boxes:
        doc = {
            "agent_id": int(b.agent_id),
            "class": b.class_name,
            "center": [float(v) for v in b.center],
            "size": [float(v) for v in b.size],
            "yaw": float(b.yaw),
            "speed": float(b.speed),
        }
        if instance_ids is not None and b.agent_id in instance_ids:
            doc["instance_id"] = int(instance_ids[b.agent_id])
        boxes.append(doc)
    return json_dumps({
        "frame": int(frame_index),
        "time": float(time),
        "ego_pose": ann.ego_pose.to_dict(),
        "boxes": boxes,
    })


def pose_line(pose, frame_index: int, time: float, speed: float) -> str:
    return json_dumps({
        "frame": int(frame_index),
        "time": float(time),
        "pose": pose.to_dict(),
        "speed": float(speed),
    })


def read_jsonl(path: Path):
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            out.append(json.loads(line))
    return out
