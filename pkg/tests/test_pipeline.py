import hashlib
import json
import math
import shutil

import numpy as np
import pytest

from oasim.errors import Invalid, OutputNotEmpty, Unreadable
from oasim.formats import read_jsonl
from oasim.geometry import Pose, quat_from_matrix
from oasim.sensors import FRONT_CAMERA_ROTATION
from oasim.pipeline import (ExportRequest, Finding, IntegrityReport, ingest,
                            load_manifest, run_export)
from oasim.sampledata import write_demo
from oasim.sensors import CameraModel, LidarModel, Sensor, SensorRig, save_rig


def _small_rig() -> SensorRig:
    cam = CameraModel.centered(96, 72, 80.0, 80.0)
    lidar = LidarModel(
        elevations=np.radians([-12.0, -6.0, 0.0, 6.0]),
        azimuth_step=math.radians(6.0),
        spin_period=0.1,
        max_range=120.0,
    )
    return SensorRig([
        Sensor("cam", "camera", cam,
               Pose(np.array([1.5, 0.0, 1.4]), quat_from_matrix(FRONT_CAMERA_ROTATION))),
        Sensor("top", "lidar", lidar,
               Pose(np.array([0.0, 0.0, 2.0]), np.array([1.0, 0.0, 0.0, 0.0]))),
    ])


@pytest.fixture(scope="module")
def export_env(tmp_path_factory):
    """Demo inputs shrunk to a tiny rig and two frames, exported twice."""
    root = tmp_path_factory.mktemp("pipeline")
    src = root / "inputs"
    write_demo(src)
    save_rig(_small_rig(), src / "rig.json")
    doc = json.loads((src / "scenario.json").read_text())
    doc["generation"] = {"frame_rate": 1.0, "duration": 2.0}
    doc["traffic"] = {"preset": "few"}
    (src / "scenario.json").write_text(json.dumps(doc))

    req = ExportRequest(scenario_path=src / "scenario.json", out_dir=root / "out_a")
    manifest_a = run_export(req)
    manifest_b = run_export(ExportRequest(scenario_path=src / "scenario.json",
                                          out_dir=root / "out_b"))
    return {"src": src, "out_a": root / "out_a", "out_b": root / "out_b",
            "manifest_a": manifest_a, "manifest_b": manifest_b}


def _fresh_copy(export_env, tmp_path):
    dst = tmp_path / "copy"
    shutil.copytree(export_env["out_a"], dst)
    return dst


def _rewrite_log(dataset, mutate):
    path = dataset / "log.json"
    doc = json.loads(path.read_text())
    mutate(doc)
    path.write_text(json.dumps(doc))


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def test_export_tree_and_manifest(export_env):
    out = export_env["out_a"]
    manifest = export_env["manifest_a"]
    assert manifest == load_manifest(out)
    assert manifest["frame_count"] == 2
    assert len(manifest["frames"]) == 2
    assert [f["time"] for f in manifest["frames"]] == [0.0, 1.0]

    expected = {
        "images/cam/000000.png", "images/cam/000001.png",
        "clouds/top/000000.bin", "clouds/top/000000.json",
        "clouds/top/000001.bin", "clouds/top/000001.json",
        "annotations.jsonl", "poses.jsonl", "log.json",
    }
    assert set(manifest["artifacts"]) == expected
    for rel in expected:
        assert (out / rel).exists()
    # manifest hashes itself verify against the files on disk
    for rel, digest in manifest["artifacts"].items():
        assert hashlib.sha256((out / rel).read_bytes()).hexdigest() == digest
    for ref in manifest["references"].values():
        data = (export_env["src"] / ref["path"].split("/")[-1]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == ref["sha256"]


def test_export_deterministic_artifacts(export_env):
    a, b = export_env["manifest_a"], export_env["manifest_b"]
    assert a["artifacts"] == b["artifacts"]
    assert a["job_id"] != b["job_id"]
    stripped = {k: v for k, v in a.items() if k not in ("job_id", "created_at")}
    assert stripped == {k: v for k, v in b.items() if k not in ("job_id", "created_at")}


def test_export_jsonl_outputs(export_env):
    out = export_env["out_a"]
    anns = read_jsonl(out / "annotations.jsonl")
    poses = read_jsonl(out / "poses.jsonl")
    assert [a["frame"] for a in anns] == [0, 1]
    assert [p["frame"] for p in poses] == [0, 1]
    # traffic agents get scene instance ids past the base scene's two
    ids = {b["instance_id"] for a in anns for b in a["boxes"]}
    assert ids and min(ids) >= 3
    for a in anns:
        assert len(a["boxes"]) == 5


def test_export_request_overrides(export_env, tmp_path):
    req = ExportRequest(scenario_path=export_env["src"] / "scenario.json",
                        out_dir=tmp_path / "o", frame_rate=2.0, duration=0.5,
                        seed=123)
    manifest = run_export(req)
    assert manifest["frame_count"] == 1
    assert manifest["seed"] == 123
    assert manifest["scenario"]["seed"] == 123


def test_export_refuses_nonempty_output(export_env, tmp_path):
    req = ExportRequest(scenario_path=export_env["src"] / "scenario.json",
                        out_dir=export_env["out_a"])
    with pytest.raises(OutputNotEmpty):
        run_export(req)
    f = tmp_path / "file"
    f.write_text("x")
    with pytest.raises(OutputNotEmpty):
        run_export(ExportRequest(export_env["src"] / "scenario.json", f))


@pytest.mark.parametrize("kw", [
    {"frame_rate": -1.0},
    {"duration": 0.0},
    {"frame_rate": 0.1, "duration": 1.0},  # rounds to zero frames
])
def test_export_rejects_bad_timing(export_env, tmp_path, kw):
    req = ExportRequest(scenario_path=export_env["src"] / "scenario.json",
                        out_dir=tmp_path / "o", **kw)
    with pytest.raises(Invalid):
        run_export(req)
    assert not (tmp_path / "o").exists()  # rejected before touching disk


def test_export_failure_leaves_no_manifest(export_env, tmp_path, monkeypatch):
    calls = {"n": 0}

    def explode(*a, **k):
        calls["n"] += 1
        if calls["n"] > 1:
            raise RuntimeError("render died")
        import oasim.render
        return oasim.render.render_camera(*a, **k)

    monkeypatch.setattr("oasim.pipeline.render_camera", explode)
    req = ExportRequest(scenario_path=export_env["src"] / "scenario.json",
                        out_dir=tmp_path / "o")
    with pytest.raises(RuntimeError):
        run_export(req)
    out = tmp_path / "o"
    assert out.exists()  # partial artifacts may remain
    assert not (out / "manifest.json").exists()
    assert not list(out.glob("*.tmp"))
    with pytest.raises(Unreadable):
        load_manifest(out)


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------

def test_ingest_clean_dataset(export_env):
    log, report = ingest(export_env["out_a"])
    assert isinstance(report, IntegrityReport)
    assert report.passed and report.findings == []
    assert len(log.frames) == 2
    assert [f.time for f in log.frames] == [0.0, 1.0]
    assert log.rig is not None and "cam" in log.rig and "top" in log.rig
    assert log.frames[0].pose is not None
    assert log.frames[1].images == {"cam": "images/cam/000001.png"}
    assert log.metadata["frame_count"] == 2


def test_ingest_missing_log(tmp_path):
    with pytest.raises(Unreadable):
        ingest(tmp_path)
    (tmp_path / "log.json").write_text("{broken")
    with pytest.raises(Unreadable):
        ingest(tmp_path)
    (tmp_path / "log.json").write_text(json.dumps({"metadata": {}}))
    with pytest.raises(Unreadable):
        ingest(tmp_path)


def test_ingest_missing_calibration(export_env, tmp_path):
    ds = _fresh_copy(export_env, tmp_path)
    _rewrite_log(ds, lambda d: d.pop("rig"))
    log, report = ingest(ds)
    assert report.codes() == ["MISSING_CALIBRATION"]
    assert not report.passed
    assert log.rig is None and len(log.frames) == 2


def test_ingest_bad_calibration(export_env, tmp_path):
    ds = _fresh_copy(export_env, tmp_path)
    _rewrite_log(ds, lambda d: d["rig"]["sensors"][0].__setitem__("kind", "radar"))
    log, report = ingest(ds)
    assert "BAD_CALIBRATION" in report.codes()
    assert not report.passed


def test_ingest_non_monotonic_time(export_env, tmp_path):
    ds = _fresh_copy(export_env, tmp_path)
    _rewrite_log(ds, lambda d: d["frames"][1].__setitem__("time", 0.0))
    log, report = ingest(ds)
    assert "NON_MONOTONIC_TIME" in report.codes()
    bad = [f for f in report.findings if f.code == "NON_MONOTONIC_TIME"]
    assert bad[0].frame == 1 and bad[0].severity == "error"


def test_ingest_bad_pose(export_env, tmp_path):
    ds = _fresh_copy(export_env, tmp_path)
    _rewrite_log(ds, lambda d: d["frames"][0].__setitem__("pose", {"translation": "x"}))
    log, report = ingest(ds)
    assert "BAD_POSE" in report.codes()
    assert log.frames[0].pose is None and log.frames[1].pose is not None


def test_ingest_missing_sensor_ref(export_env, tmp_path):
    ds = _fresh_copy(export_env, tmp_path)
    _rewrite_log(ds, lambda d: d["frames"][0]["images"].pop("cam"))
    log, report = ingest(ds)
    assert report.codes() == ["MISSING_SENSOR_REF"]


def test_ingest_missing_artifact(export_env, tmp_path):
    ds = _fresh_copy(export_env, tmp_path)
    (ds / "images/cam/000001.png").unlink()
    (ds / "clouds/top/000000.bin").unlink()
    log, report = ingest(ds)
    findings = [f for f in report.findings if f.code == "MISSING_ARTIFACT"]
    assert len(findings) == 2
    assert {f.frame for f in findings} == {0, 1}


def test_finding_is_frozen():
    f = Finding("X", "error", "d")
    with pytest.raises(AttributeError):
        f.code = "Y"
