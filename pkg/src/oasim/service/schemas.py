"""Request/response bodies for the HTTP layer."""

from __future__ import annotations

from pydantic import BaseModel, Field


class CreateSessionRequest(BaseModel):
    scene: str
    map: str
    rig: str


class RouteRequest(BaseModel):
    start_lane: str
    goal_lane: str


class ManeuverRequest(BaseModel):
    kind: str
    trigger_s: float = 0.0
    successor: str | None = None
    speed: float | None = None


class TrafficRequest(BaseModel):
    preset: str
    seed: int = 0
    count: int | None = None


class RigRequest(BaseModel):
    sensors: list[dict]


class RouteStepDoc(BaseModel):
    lane_id: str
    mode: str
    change_at: float | None = None
    points: list[list[float]]


class RouteDoc(BaseModel):
    steps: list[RouteStepDoc]
    total_cost: float
    length: float
    duration: float


class SessionResponse(BaseModel):
    session_id: str
    revision: int
    refs: dict
    lane_count: int
    traffic_count: int
    traffic_preset: str | None = None
    sensors: list[dict]
    route: RouteDoc | None = None


class JobRequest(BaseModel):
    scenario: str
    out_dir: str | None = None
    frame_rate: float | None = None
    duration: float | None = None
    seed: int | None = None


class JobResponse(BaseModel):
    job_id: str
    state: str
    progress: float = Field(ge=0.0, le=1.0)
    out_dir: str
    error: dict | None = None
    manifest: dict | None = None


class ErrorBody(BaseModel):
    code: str
    message: str
