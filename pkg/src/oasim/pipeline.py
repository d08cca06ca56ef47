"""Dataset jobs: deterministic export of sensor frames to disk, and ingest
of a written dataset back into a unified in-memory log."""

from __future__ import annotations

import datetime
import hashlib
import json
import os
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import Invalid, OutputNotEmpty, Unreadable
from .formats import (annotations_line, json_dumps, pose_line, save_cloud,
                      save_rgb_png)
from .geometry import Pose
from .render import extract_annotations, render_camera, render_lidar
from .scene import compose
from .scenario import Scenario, build_bundle, load_scenario, scenario_to_dict
from .sensors import SensorRig, rig_from_dict, rig_to_dict
from .traffic import TrafficWorld

GENERATOR_NAME = "oasim"
GENERATOR_VERSION = "0.1.0"


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

@dataclass
class ExportRequest:
    scenario_path: Path
    out_dir: Path
    frame_rate: float | None = None   # None takes the scenario defaults
    duration: float | None = None
    seed: int | None = None


class _ClampedTrajectory:
    """Pose/speed provider that parks the vehicle at the final sample once
    the trajectory ends, so sweeps may overrun the planned horizon."""

    def __init__(self, trajectory):
        self._tr = trajectory

    def pose_at(self, t: float) -> Pose:
        return self._tr.pose_at(min(max(t, self._tr.t0), self._tr.t_end))

    def speed_at(self, t: float) -> float:
        if t > self._tr.t_end or t < self._tr.t0:
            return 0.0
        return self._tr.speed_at(t)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _prepare_out_dir(out_dir: Path):
    out_dir = Path(out_dir)
    if out_dir.exists():
        if not out_dir.is_dir():
            raise OutputNotEmpty(f"{out_dir} exists and is not a directory")
        if any(out_dir.iterdir()):
            raise OutputNotEmpty(f"output directory {out_dir} is not empty")
    else:
        out_dir.mkdir(parents=True)
    return out_dir


def run_export(req: ExportRequest, data_root: Path | None = None,
               progress_cb=None) -> dict:
    """Generate one dataset; returns the manifest document. Byte-identical
    artifacts for identical requests, apart from job id and timestamp in the
    manifest itself."""
    scenario_path = Path(req.scenario_path)
    sc = load_scenario(scenario_path)
    if req.seed is not None:
        sc = replace(sc, seed=int(req.seed))
    if req.frame_rate is not None:
        sc = replace(sc, frame_rate=float(req.frame_rate))
    if req.duration is not None:
        sc = replace(sc, duration=float(req.duration))
    if sc.frame_rate <= 0 or sc.duration <= 0:
        raise Invalid("frame rate and duration must be positive")
    n_frames = int(round(sc.frame_rate * sc.duration))
    if n_frames < 1:
        raise Invalid("duration times frame rate must be at least 1 frame")

    out_dir = _prepare_out_dir(req.out_dir)
    bundle = build_bundle(sc, scenario_path.parent, data_root)
    rig = bundle.rig
    base = bundle.base_scene
    ego = _ClampedTrajectory(bundle.trajectory)
    world = TrafficWorld(bundle.graph, bundle.agents, bundle.params,
                         ego=bundle.trajectory)

    for cam in rig.cameras():
        (out_dir / "images" / cam.sensor_id).mkdir(parents=True, exist_ok=True)
    for lid in rig.lidars():
        (out_dir / "clouds" / lid.sensor_id).mkdir(parents=True, exist_ok=True)

    ann_lines = []
    pose_lines = []
    frame_entries = []
    artifacts = []

    base_count = len(base.instances)
    for i in range(n_frames):
        t_i = i / sc.frame_rate
        world.run_until(t_i)
        ego_pose = ego.pose_at(t_i)
        ego_speed = ego.speed_at(t_i)

        agent_rows = world.agent_poses()
        instances = list(base.instances)
        inst_of_agent = {}
        for agent_id, asset_id, pose, _speed in agent_rows:
            inst_id = len(instances) + 1
            inst_of_agent[agent_id] = inst_id
            instances.append((inst_id, asset_id, pose))
        snapshot = compose(base.background, base.background_albedo,
                           instances, bundle.library)

        entry = {"index": i, "time": t_i, "images": {}, "clouds": {}}
        for cam in rig.cameras():
            frame = render_camera(snapshot, cam.model, ego_pose.compose(cam.extrinsic))
            rel = f"images/{cam.sensor_id}/{i:06d}.png"
            save_rgb_png(frame.rgb, out_dir / rel)
            entry["images"][cam.sensor_id] = rel
            artifacts.append(rel)
        for s_idx, lid in enumerate(rig.lidars()):
            sweep_seed = np.random.SeedSequence([int(sc.seed), i, s_idx])
            cloud = render_lidar(lambda t, s=snapshot: s, lid.model, ego,
                                 lid.extrinsic, t_i, sweep_seed)
            rel_bin = f"clouds/{lid.sensor_id}/{i:06d}.bin"
            rel_hdr = f"clouds/{lid.sensor_id}/{i:06d}.json"
            save_cloud(cloud, out_dir / rel_bin, out_dir / rel_hdr)
            entry["clouds"][lid.sensor_id] = {"bin": rel_bin, "header": rel_hdr}
            artifacts.extend([rel_bin, rel_hdr])

        ann = extract_annotations(agent_rows, bundle.library, ego_pose)
        ann_lines.append(annotations_line(ann, i, t_i, inst_of_agent))
        pose_lines.append(pose_line(ego_pose, i, t_i, ego_speed))
        entry["pose"] = ego_pose.to_dict()
        frame_entries.append(entry)
        if progress_cb is not None:
            progress_cb((i + 1) / n_frames)

    (out_dir / "annotations.jsonl").write_text("\n".join(ann_lines) + "\n")
    artifacts.append("annotations.jsonl")
    (out_dir / "poses.jsonl").write_text("\n".join(pose_lines) + "\n")
    artifacts.append("poses.jsonl")

    log = {
        "metadata": {
            "source": GENERATOR_NAME,
            "version": GENERATOR_VERSION,
            "frame_count": n_frames,
            "frame_rate": sc.frame_rate,
            "duration": sc.duration,
        },
        "rig": rig_to_dict(rig),
        "frames": frame_entries,
    }
    (out_dir / "log.json").write_text(json_dumps(log) + "\n")
    artifacts.append("log.json")

    manifest = {
        "job_id": uuid.uuid4().hex,
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "seed": int(sc.seed),
        "frame_rate": sc.frame_rate,
        "duration": sc.duration,
        "frame_count": n_frames,
        "generator": {"name": GENERATOR_NAME, "version": GENERATOR_VERSION},
        "scenario": scenario_to_dict(sc),
        "references": {
            "scenario": {"path": str(scenario_path), "sha256": _sha256(scenario_path)},
            "map": {"path": str(bundle.paths["map"]), "sha256": _sha256(bundle.paths["map"])},
            "scene": {"path": str(bundle.paths["scene"]), "sha256": _sha256(bundle.paths["scene"])},
            "rig": {"path": str(bundle.paths["rig"]), "sha256": _sha256(bundle.paths["rig"])},
        },
        "frames": frame_entries,
        "artifacts": {rel: _sha256(out_dir / rel) for rel in sorted(artifacts)},
    }
    # manifest lands last, atomically: readers never observe a partial dataset
    tmp = out_dir / "manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, out_dir / "manifest.json")
    return manifest


def load_manifest(out_dir: Path) -> dict:
    path = Path(out_dir) / "manifest.json"
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise Unreadable(f"cannot read manifest {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise Unreadable(f"manifest {path} is not valid JSON: {exc}") from None


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Finding:
    code: str
    severity: str  # error | warning
    detail: str
    frame: int | None = None


@dataclass
class IntegrityReport:
    findings: list

    @property
    def passed(self) -> bool:
        return not any(f.severity == "error" for f in self.findings)

    def codes(self):
        return sorted({f.code for f in self.findings})


@dataclass
class LogFrame:
    index: int
    time: float
    pose: Pose | None
    images: dict
    clouds: dict


@dataclass
class UnifiedLog:
    frames: list
    rig: SensorRig | None
    metadata: dict = field(default_factory=dict)


def ingest(dataset_dir: Path):
    """Read a dataset directory into (UnifiedLog, IntegrityReport).

    Malformed container files raise Unreadable; recoverable content problems
    become report findings instead."""
    dataset_dir = Path(dataset_dir)
    log_path = dataset_dir / "log.json"
    if not log_path.exists():
        raise Unreadable(f"{dataset_dir} has no log.json")
    try:
        doc = json.loads(log_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise Unreadable(f"cannot parse {log_path}: {exc}") from None
    if not isinstance(doc, dict) or "frames" not in doc:
        raise Unreadable(f"{log_path} is missing the frames list")

    findings = []
    rig = None
    if "rig" not in doc:
        findings.append(Finding("MISSING_CALIBRATION", "error",
                                "log carries no sensor rig"))
    else:
        try:
            rig = rig_from_dict(doc["rig"])
        except Invalid as exc:
            findings.append(Finding("BAD_CALIBRATION", "error", str(exc)))

    frames = []
    prev_time = None
    for i, fr in enumerate(doc["frames"]):
        time = float(fr.get("time", 0.0))
        if prev_time is not None and time <= prev_time:
            findings.append(Finding(
                "NON_MONOTONIC_TIME", "error",
                f"frame {i} time {time} does not increase past {prev_time}", i))
        prev_time = time

        pose = None
        if "pose" in fr:
            try:
                pose = Pose.from_dict(fr["pose"])
            except (KeyError, TypeError, ValueError, Invalid):
                findings.append(Finding("BAD_POSE", "error",
                                        f"frame {i} pose does not parse", i))
        images = dict(fr.get("images", {}))
        clouds = dict(fr.get("clouds", {}))

        if rig is not None:
            for cam in rig.cameras():
                if cam.sensor_id not in images:
                    findings.append(Finding(
                        "MISSING_SENSOR_REF", "error",
                        f"frame {i} lacks an image for {cam.sensor_id}", i))
            for lid in rig.lidars():
                if lid.sensor_id not in clouds:
                    findings.append(Finding(
                        "MISSING_SENSOR_REF", "error",
                        f"frame {i} lacks a cloud for {lid.sensor_id}", i))
        for rel in list(images.values()):
            if not (dataset_dir / rel).exists():
                findings.append(Finding("MISSING_ARTIFACT", "error",
                                        f"frame {i}: {rel} does not exist", i))
        for ref in clouds.values():
            rels = [ref] if isinstance(ref, str) else [ref.get("bin"), ref.get("header")]
            for rel in rels:
                if rel and not (dataset_dir / rel).exists():
                    findings.append(Finding("MISSING_ARTIFACT", "error",
                                            f"frame {i}: {rel} does not exist", i))
        frames.append(LogFrame(i, time, pose, images, clouds))

    log = UnifiedLog(frames=frames, rig=rig, metadata=dict(doc.get("metadata", {})))
    return log, IntegrityReport(findings)
