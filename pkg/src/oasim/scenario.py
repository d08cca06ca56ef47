"""Scenario documents bundle a map, scene, rig, ego route and traffic setup
into one reproducible description of a run."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import Invalid
from .hdmap import LaneGraph, Maneuver, Route, apply_maneuver, load_hdmap, plan_route
from .scene import AssetLibrary, SceneSnapshot, load_scene
from .sensors import SensorRig, load_rig
from .traffic import DENSITY_PRESETS, Agent, TrafficParams, spawn
from .trajectory import DEFAULT_PROFILE, Profile, Trajectory, generate_trajectory

MANEUVER_KINDS = ("lane-change-left", "lane-change-right", "turn-select",
                  "speed-set", "stop")


@dataclass
class Scenario:
    map_ref: str
    scene_ref: str
    rig_ref: str
    seed: int
    start_lane: str
    goal_lane: str
    preset: str = "few"
    count: int | None = None
    traffic_overrides: dict = field(default_factory=dict)
    maneuvers: list[Maneuver] = field(default_factory=list)
    profile_overrides: dict = field(default_factory=dict)
    frame_rate: float = 2.0
    duration: float = 5.0


@dataclass
class ScenarioBundle:
    """Everything resolved and ready to simulate."""

    scenario: Scenario
    graph: LaneGraph
    base_scene: SceneSnapshot
    library: AssetLibrary
    rig: SensorRig
    route: Route
    trajectory: Trajectory
    agents: list[Agent]
    params: TrafficParams
    profile: Profile
    paths: dict = field(default_factory=dict)


def _maneuver_from_dict(doc: dict) -> Maneuver:
    kind = doc.get("kind")
    if kind not in MANEUVER_KINDS:
        raise Invalid(f"unknown maneuver kind {kind!r}")
    return Maneuver(
        kind=kind,
        trigger_s=float(doc.get("trigger_s", 0.0)),
        successor=doc.get("successor"),
        speed=float(doc["speed"]) if "speed" in doc else None,
    )


def _maneuver_to_dict(m: Maneuver) -> dict:
    doc = {"kind": m.kind, "trigger_s": float(m.trigger_s)}
    if m.successor is not None:
        doc["successor"] = m.successor
    if m.speed is not None:
        doc["speed"] = float(m.speed)
    return doc


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        ego = doc["ego"]
        traffic = doc.get("traffic", {})
        gen = doc.get("generation", {})
        return Scenario(
            map_ref=doc["map"],
            scene_ref=doc["scene"],
            rig_ref=doc["rig"],
            seed=int(doc.get("seed", 0)),
            start_lane=ego["start_lane"],
            goal_lane=ego["goal_lane"],
            preset=traffic.get("preset", "few"),
            count=int(traffic["count"]) if "count" in traffic else None,
            traffic_overrides=dict(traffic.get("params", {})),
            maneuvers=[_maneuver_from_dict(m) for m in ego.get("maneuvers", [])],
            profile_overrides=dict(ego.get("profile", {})),
            frame_rate=float(gen.get("frame_rate", 2.0)),
            duration=float(gen.get("duration", 5.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise Invalid(f"bad scenario document: {exc}") from None


def scenario_to_dict(sc: Scenario) -> dict:
    doc = {
        "map": sc.map_ref,
        "scene": sc.scene_ref,
        "rig": sc.rig_ref,
        "seed": int(sc.seed),
        "traffic": {"preset": sc.preset},
        "ego": {
            "start_lane": sc.start_lane,
            "goal_lane": sc.goal_lane,
            "maneuvers": [_maneuver_to_dict(m) for m in sc.maneuvers],
        },
        "generation": {"frame_rate": sc.frame_rate, "duration": sc.duration},
    }
    if sc.count is not None:
        doc["traffic"]["count"] = int(sc.count)
    if sc.traffic_overrides:
        doc["traffic"]["params"] = sc.traffic_overrides
    if sc.profile_overrides:
        doc["ego"]["profile"] = sc.profile_overrides
    return doc


def load_scenario(path: Path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise Invalid(f"cannot read scenario {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise Invalid(f"scenario {path} is not valid JSON: {exc}") from None
    return scenario_from_dict(doc)


def save_scenario(sc: Scenario, path: Path):
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2, sort_keys=True) + "\n")


def _resolve(ref: str, base_dir: Path, data_root: Path | None) -> Path:
    p = Path(ref)
    if p.is_absolute():
        return p
    cand = base_dir / p
    if cand.exists() or data_root is None:
        return cand
    return data_root / p


def build_bundle(sc: Scenario, base_dir: Path, data_root: Path | None = None) -> ScenarioBundle:
    """Resolve file references and run planning plus spawning. Deterministic
    for a fixed scenario document."""
    base_dir = Path(base_dir)
    map_path = _resolve(sc.map_ref, base_dir, data_root)
    scene_path = _resolve(sc.scene_ref, base_dir, data_root)
    rig_path = _resolve(sc.rig_ref, base_dir, data_root)

    graph = load_hdmap(map_path)
    base_scene = load_scene(scene_path)
    library = base_scene.library
    rig = load_rig(rig_path)

    route = plan_route(graph, sc.start_lane, sc.goal_lane)
    for m in sc.maneuvers:
        route = apply_maneuver(graph, route, m)

    profile = DEFAULT_PROFILE
    if sc.profile_overrides:
        try:
            profile = replace(profile, **{k: float(v) for k, v in sc.profile_overrides.items()})
        except TypeError as exc:
            raise Invalid(f"bad profile overrides: {exc}") from None
    profile.validate()
    trajectory = generate_trajectory(graph, route, profile)

    if sc.preset not in DENSITY_PRESETS:
        raise Invalid(f"unknown traffic preset {sc.preset!r}")
    preset = DENSITY_PRESETS[sc.preset]
    if sc.count is not None:
        preset = replace(preset, count=int(sc.count))
    try:
        params = replace(TrafficParams(), **{k: float(v) for k, v in sc.traffic_overrides.items()})
    except TypeError as exc:
        raise Invalid(f"bad traffic params: {exc}") from None
    agents = spawn(graph, preset, library, sc.seed, params)

    return ScenarioBundle(
        scenario=sc, graph=graph, base_scene=base_scene, library=library,
        rig=rig, route=route, trajectory=trajectory, agents=agents,
        params=params, profile=profile,
        paths={"map": map_path, "scene": scene_path, "rig": rig_path},
    )
