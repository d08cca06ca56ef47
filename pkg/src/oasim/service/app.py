"""HTTP surface: sessions with revisioned edits, on-demand PNG previews,
and dataset generation jobs."""

from __future__ import annotations

import math
import os
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..errors import Invalid, OasimError
from ..formats import rgb_png_bytes
from ..hdmap import Maneuver
from ..pipeline import GENERATOR_NAME, GENERATOR_VERSION
from ..render import render_camera
from ..sensors import CameraModel, camera_look_pose, rig_to_dict
from .schemas import (CreateSessionRequest, JobRequest, JobResponse,
                      ManeuverRequest, RigRequest, RouteDoc, RouteRequest,
                      RouteStepDoc, SessionResponse, TrafficRequest)
from .state import JobManager, SessionStore, SessionView

REVISION_HEADER = "X-OASim-Revision"


def _route_doc(view: SessionView) -> RouteDoc | None:
    if view.route is None:
        return None
    steps = []
    length = 0.0
    for st in view.route.steps:
        lane = view.graph.lane(st.lane_id)
        length += lane.length
        steps.append(RouteStepDoc(
            lane_id=st.lane_id, mode=st.mode, change_at=st.change_at,
            points=[[float(p[0]), float(p[1])] for p in lane.centerline],
        ))
    duration = view.trajectory.duration if view.trajectory is not None else 0.0
    return RouteDoc(steps=steps, total_cost=view.route.total_cost,
                    length=length, duration=duration)


def _session_doc(view: SessionView) -> SessionResponse:
    return SessionResponse(
        session_id=view.session_id,
        revision=view.revision,
        refs=view.refs,
        lane_count=len(view.graph.lanes),
        traffic_count=len(view.agents),
        traffic_preset=view.traffic_preset,
        sensors=[{"id": s.sensor_id, "kind": s.kind} for s in view.rig.sensors],
        route=_route_doc(view),
    )


def _scaled_model(m: CameraModel, w: int | None, h: int | None,
                  fx: float | None, fy: float | None) -> CameraModel:
    if w is None and h is None and fx is None and fy is None:
        return m
    if w is None:
        w = m.width if h is None else max(1, round(m.width * h / m.height))
    if h is None:
        h = max(1, round(m.height * w / m.width))
    sx, sy = w / m.width, h / m.height
    return CameraModel(int(w), int(h),
                       float(fx) if fx is not None else m.fx * sx,
                       float(fy) if fy is not None else m.fy * sy,
                       m.cx * sx, m.cy * sy, m.near)


def create_app(data_root: Path | str | None = None, workers: int = 1,
               session_ttl: float = 1800.0) -> FastAPI:
    root = Path(data_root if data_root is not None
                else os.environ.get("OASIM_DATA", "."))
    store = SessionStore(root, ttl=session_ttl)
    jobs = JobManager(root, workers=workers)

    @asynccontextmanager
    async def lifespan(_app):
        yield
        jobs.shutdown()

    app = FastAPI(title=GENERATOR_NAME, version=GENERATOR_VERSION,
                  lifespan=lifespan)
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"], expose_headers=[REVISION_HEADER])
    app.state.store = store
    app.state.jobs = jobs

    @app.exception_handler(OasimError)
    async def oasim_error(_request, exc: OasimError):
        return JSONResponse(status_code=exc.http_status,
                            content={"code": exc.code, "message": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def validation_error(_request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"code": "Invalid", "message": str(exc.errors())})

    @app.get("/")
    def index():
        return {"name": GENERATOR_NAME, "version": GENERATOR_VERSION}

    # -- sessions ----------------------------------------------------------

    @app.post("/sessions", response_model=SessionResponse)
    def create_session(req: CreateSessionRequest):
        view = store.create(req.scene, req.map, req.rig)
        return _session_doc(view)

    @app.get("/sessions/{sid}", response_model=SessionResponse)
    def get_session(sid: str):
        return _session_doc(store.view(sid))

    @app.post("/sessions/{sid}/route", response_model=SessionResponse)
    def set_route(sid: str, req: RouteRequest):
        return _session_doc(store.set_route(sid, req.start_lane, req.goal_lane))

    @app.post("/sessions/{sid}/maneuver", response_model=SessionResponse)
    def maneuver(sid: str, req: ManeuverRequest):
        m = Maneuver(kind=req.kind, trigger_s=req.trigger_s,
                     successor=req.successor, speed=req.speed)
        return _session_doc(store.maneuver(sid, m))

    @app.post("/sessions/{sid}/traffic", response_model=SessionResponse)
    def set_traffic(sid: str, req: TrafficRequest):
        return _session_doc(store.set_traffic(sid, req.preset, req.seed, req.count))

    @app.get("/sessions/{sid}/rig")
    def get_rig(sid: str):
        view = store.view(sid)
        doc = rig_to_dict(view.rig)
        doc["revision"] = view.revision
        return doc

    @app.put("/sessions/{sid}/rig", response_model=SessionResponse)
    def set_rig(sid: str, req: RigRequest):
        return _session_doc(store.set_rig(sid, {"sensors": req.sensors}))

    @app.get("/sessions/{sid}/map")
    def get_map(sid: str):
        view = store.view(sid)
        lanes = []
        for lane_id in view.graph.lane_ids():
            lane = view.graph.lane(lane_id)
            lanes.append({
                "id": lane.lane_id,
                "points": [[float(p[0]), float(p[1])] for p in lane.centerline],
                "width": lane.width,
                "speed_limit": lane.speed_limit,
                "successors": lane.successors,
                "left": lane.left,
                "right": lane.right,
                "length": lane.length,
            })
        pts = [p for ln in lanes for p in ln["points"]]
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        return {"lanes": lanes,
                "bounds": [[min(xs), min(ys)], [max(xs), max(ys)]],
                "revision": view.revision}

    # -- preview -----------------------------------------------------------

    @app.get("/sessions/{sid}/preview")
    def preview(sid: str, sensor: str, t: float = 0.0,
                x: float | None = None, y: float | None = None,
                z: float | None = None, yaw: float = 0.0, pitch: float = -90.0,
                w: int | None = None, h: int | None = None,
                fx: float | None = None, fy: float | None = None):
        view = store.view(sid)
        if sensor == "free":
            base = view.preview_pose.translation
            pose = camera_look_pose(
                (base[0] if x is None else x,
                 base[1] if y is None else y,
                 base[2] if z is None else z),
                math.radians(yaw), math.radians(pitch))
            model = _scaled_model(view.preview_model, w, h, fx, fy)
        else:
            s = view.rig.get(sensor)
            if s.kind != "camera":
                raise Invalid(f"sensor {sensor!r} is not a camera; preview "
                              "supports cameras and the free camera")
            if view.trajectory is None:
                raise Invalid("rig-sensor preview needs a planned route")
            pose = view.trajectory.pose_at(t).compose(s.extrinsic)
            model = _scaled_model(s.model, w, h, fx, fy)
        frame = render_camera(view.scene_at(t), model, pose)
        return Response(content=rgb_png_bytes(frame.rgb), media_type="image/png",
                        headers={REVISION_HEADER: str(view.revision)})

    # -- jobs ----------------------------------------------------------------

    def _job_doc(job) -> JobResponse:
        return JobResponse(job_id=job.job_id, state=job.state,
                           progress=job.progress, out_dir=str(job.out_dir),
                           error=job.error, manifest=job.manifest)

    @app.post("/jobs", response_model=JobResponse)
    def submit_job(req: JobRequest):
        job = jobs.submit(req.scenario, req.out_dir, req.frame_rate,
                          req.duration, req.seed)
        return _job_doc(job)

    @app.get("/jobs/{job_id}", response_model=JobResponse)
    def job_status(job_id: str):
        return _job_doc(jobs.get(job_id))

    return app
