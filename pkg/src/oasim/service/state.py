"""Session and job bookkeeping behind the HTTP layer.

Sessions are edited single-writer: every mutation swaps in a new immutable
view with a bumped revision, so concurrent previews always read one
consistent revision. Jobs run on a small worker pool and only ever touch
their own output directory.
"""

from __future__ import annotations

import copy
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import Invalid, NotFound, OutputNotEmpty
from ..geometry import Pose
from ..hdmap import LaneGraph, Maneuver, Route, apply_maneuver, load_hdmap, plan_route
from ..pipeline import ExportRequest, run_export
from ..scenario import _resolve  # shared ref resolution
from ..scene import AssetLibrary, SceneSnapshot, compose, load_scene
from ..sensors import CameraModel, SensorRig, camera_look_pose, load_rig, rig_from_dict
from ..traffic import DENSITY_PRESETS, TrafficParams, TrafficWorld, spawn
from ..trajectory import Trajectory, generate_trajectory

DEFAULT_SESSION_TTL = 1800.0
DEFAULT_PREVIEW_MODEL = CameraModel.centered(480, 270, 250.0, 250.0)


@dataclass(frozen=True)
class SessionView:
    """Immutable published state of one session revision."""

    session_id: str
    revision: int
    refs: dict
    graph: LaneGraph
    base_scene: SceneSnapshot
    library: AssetLibrary
    rig: SensorRig
    route: Route | None = None
    trajectory: Trajectory | None = None
    agents: tuple = ()
    traffic_params: TrafficParams = field(default_factory=TrafficParams)
    traffic_seed: int | None = None
    traffic_preset: str | None = None
    preview_pose: Pose | None = None
    preview_model: CameraModel = DEFAULT_PREVIEW_MODEL

    def agents_at(self, t: float):
        """Agent pose rows at sim time t; steps a throwaway world copy."""
        if not self.agents:
            return []
        world = TrafficWorld(self.graph, copy.deepcopy(list(self.agents)),
                             self.traffic_params, ego=self.trajectory)
        world.run_until(t)
        return world.agent_poses()

    def scene_at(self, t: float) -> SceneSnapshot:
        rows = self.agents_at(t)
        if not rows:
            return self.base_scene
        instances = list(self.base_scene.instances)
        for _agent_id, asset_id, pose, _v in rows:
            instances.append((len(instances) + 1, asset_id, pose))
        return compose(self.base_scene.background, self.base_scene.background_albedo,
                       instances, self.library)


class Session:
    def __init__(self, view: SessionView):
        self._view = view
        self.lock = threading.Lock()
        self.last_access = time.monotonic()

    @property
    def view(self) -> SessionView:
        self.last_access = time.monotonic()
        return self._view

    def publish(self, view: SessionView):
        self._view = view
        self.last_access = time.monotonic()


def _default_preview_pose(graph: LaneGraph) -> Pose:
    c = graph.centroid()
    # straight down: pitch -90 degrees
    return camera_look_pose((float(c[0]), float(c[1]), float(c[2]) + 50.0),
                            0.0, -np.pi / 2)


class SessionStore:
    def __init__(self, data_root: Path, ttl: float = DEFAULT_SESSION_TTL):
        self.data_root = Path(data_root)
        self.ttl = float(ttl)
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _expire(self):
        now = time.monotonic()
        dead = [sid for sid, s in self._sessions.items()
                if now - s.last_access > self.ttl]
        for sid in dead:
            del self._sessions[sid]

    def create(self, scene_ref: str, map_ref: str, rig_ref: str) -> SessionView:
        graph = load_hdmap(_resolve(map_ref, self.data_root, None))
        base_scene = load_scene(_resolve(scene_ref, self.data_root, None))
        rig = load_rig(_resolve(rig_ref, self.data_root, None))
        view = SessionView(
            session_id=uuid.uuid4().hex[:12],
            revision=0,
            refs={"scene": scene_ref, "map": map_ref, "rig": rig_ref},
            graph=graph,
            base_scene=base_scene,
            library=base_scene.library,
            rig=rig,
            preview_pose=_default_preview_pose(graph),
        )
        with self._lock:
            self._expire()
            self._sessions[view.session_id] = Session(view)
        return view

    def get(self, session_id: str) -> Session:
        with self._lock:
            self._expire()
            try:
                return self._sessions[session_id]
            except KeyError:
                raise NotFound(f"no session {session_id!r}") from None

    def view(self, session_id: str) -> SessionView:
        return self.get(session_id).view

    # -- edits: each runs under the session lock and bumps the revision ----

    def _edit(self, session_id: str, fn) -> SessionView:
        session = self.get(session_id)
        with session.lock:
            old = session.view
            new = fn(old)
            new = replace(new, revision=old.revision + 1)
            session.publish(new)
            return new

    def set_route(self, session_id: str, start: str, goal: str) -> SessionView:
        def fn(v: SessionView) -> SessionView:
            route = plan_route(v.graph, start, goal)
            trajectory = generate_trajectory(v.graph, route)
            return replace(v, route=route, trajectory=trajectory)
        return self._edit(session_id, fn)

    def maneuver(self, session_id: str, m: Maneuver) -> SessionView:
        def fn(v: SessionView) -> SessionView:
            if v.route is None:
                raise Invalid("session has no route to edit")
            route = apply_maneuver(v.graph, v.route, m)
            trajectory = generate_trajectory(v.graph, route)
            return replace(v, route=route, trajectory=trajectory)
        return self._edit(session_id, fn)

    def set_traffic(self, session_id: str, preset: str, seed: int,
                    count: int | None = None) -> SessionView:
        def fn(v: SessionView) -> SessionView:
            if preset not in DENSITY_PRESETS:
                raise Invalid(f"unknown traffic preset {preset!r}")
            p = DENSITY_PRESETS[preset]
            if count is not None:
                p = replace(p, count=int(count))
            agents = spawn(v.graph, p, v.library, seed, v.traffic_params)
            return replace(v, agents=tuple(agents), traffic_seed=seed,
                           traffic_preset=preset)
        return self._edit(session_id, fn)

    def set_rig(self, session_id: str, rig_doc: dict) -> SessionView:
        def fn(v: SessionView) -> SessionView:
            rig = rig_from_dict(rig_doc)
            return replace(v, rig=rig)
        return self._edit(session_id, fn)


# ---------------------------------------------------------------------------
# jobs
# ---------------------------------------------------------------------------

JOB_STATES = ("queued", "running", "done", "failed")


@dataclass
class Job:
    job_id: str
    out_dir: Path
    state: str = "queued"
    progress: float = 0.0
    error: dict | None = None
    manifest: dict | None = None


class JobManager:
    def __init__(self, data_root: Path, workers: int = 1):
        self.data_root = Path(data_root)
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()
        self._pool = ThreadPoolExecutor(max_workers=max(1, int(workers)))

    def submit(self, scenario_ref: str, out_ref: str | None = None,
               frame_rate: float | None = None, duration: float | None = None,
               seed: int | None = None) -> Job:
        scenario_path = _resolve(scenario_ref, self.data_root, None)
        if not Path(scenario_path).exists():
            raise Invalid(f"scenario {scenario_ref!r} not found under data root")
        job_id = uuid.uuid4().hex[:12]
        out_dir = (_resolve(out_ref, self.data_root, None) if out_ref
                   else self.data_root / "jobs" / job_id)
        if Path(out_dir).exists() and any(Path(out_dir).iterdir()):
            raise OutputNotEmpty(f"output directory {out_dir} is not empty")
        job = Job(job_id, Path(out_dir))
        with self._lock:
            self._jobs[job_id] = job
        req = ExportRequest(scenario_path, out_dir, frame_rate, duration, seed)
        self._pool.submit(self._run, job, req)
        return job

    def _run(self, job: Job, req: ExportRequest):
        job.state = "running"
        try:
            def progress(frac):
                job.progress = float(frac)
            manifest = run_export(req, data_root=self.data_root,
                                  progress_cb=progress)
            job.manifest = manifest
            job.progress = 1.0
            job.state = "done"
        except Exception as exc:  # failure lands in the status, not the log
            code = getattr(exc, "code", type(exc).__name__)
            job.error = {"code": code, "message": str(exc)}
            job.state = "failed"

    def get(self, job_id: str) -> Job:
        with self._lock:
            try:
                return self._jobs[job_id]
            except KeyError:
                raise NotFound(f"no job {job_id!r}") from None

    def shutdown(self):
        self._pool.shutdown(wait=True)
