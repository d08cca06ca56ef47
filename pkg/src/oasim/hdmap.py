"""Lane-level HD map: loading/validation, lane geometry queries,
minimum-cost route planning, and keyboard-style maneuver edits."""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (MapFormat, MapInvalid, NoNeighbor, NoRoute,
                     NotASuccessor, UnknownLane)

# Lanes closer than this at a successor joint count as connected.
SUCCESSOR_GAP = 0.1
# Extra cost of a lane-change edge on top of the target lane length.
LANE_CHANGE_PENALTY = 25.0


class Lane:
    def __init__(self, lane_id, centerline, width, speed_limit,
                 successors=(), left=None, right=None):
        self.lane_id = str(lane_id)
        self.centerline = np.asarray(centerline, dtype=np.float64).reshape(-1, 3)
        self.width = float(width)
        self.speed_limit = float(speed_limit)
        self.successors = [str(s) for s in successors]
        self.left = None if left is None else str(left)
        self.right = None if right is None else str(right)
        seg = np.diff(self.centerline, axis=0)
        seg_len = np.sqrt((seg * seg).sum(axis=1))
        self._seg_len = seg_len
        self.cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        self.length = float(self.cum[-1])

    def point_at(self, s) -> np.ndarray:
        """Centerline point at arc length s (clamped); batch-friendly."""
        s = np.clip(np.atleast_1d(np.asarray(s, dtype=np.float64)), 0.0, self.length)
        i = np.minimum(np.searchsorted(self.cum, s, side="right") - 1,
                       len(self._seg_len) - 1)
        i = np.maximum(i, 0)
        f = (s - self.cum[i]) / np.where(self._seg_len[i] > 0, self._seg_len[i], 1.0)
        p = self.centerline[i] + (self.centerline[i + 1] - self.centerline[i]) * f[:, None]
        return p[0] if np.isscalar(s) or p.shape[0] == 1 else p

    def points_at(self, s: np.ndarray) -> np.ndarray:
        s = np.clip(np.asarray(s, dtype=np.float64), 0.0, self.length)
        i = np.minimum(np.searchsorted(self.cum, s, side="right") - 1,
                       len(self._seg_len) - 1)
        i = np.maximum(i, 0)
        f = (s - self.cum[i]) / np.where(self._seg_len[i] > 0, self._seg_len[i], 1.0)
        return self.centerline[i] + (self.centerline[i + 1] - self.centerline[i]) * f[:, None]

    def project(self, point) -> float:
        """Arc length of the closest centerline point to `point`."""
        p = np.asarray(point, dtype=np.float64).reshape(3)
        a = self.centerline[:-1]
        d = self.centerline[1:] - a
        dd = (d * d).sum(axis=1)
        t = ((p - a) * d).sum(axis=1) / np.where(dd > 0, dd, 1.0)
        t = np.clip(t, 0.0, 1.0)
        closest = a + d * t[:, None]
        dist2 = ((closest - p) ** 2).sum(axis=1)
        i = int(np.argmin(dist2))
        return float(self.cum[i] + t[i] * self._seg_len[i])


@dataclass
class Feature:
    feature_class: str
    polyline: np.ndarray


class LaneGraph:
    def __init__(self, lanes, features=()):
        self.lanes = {ln.lane_id: ln for ln in lanes}
        self.features = list(features)
        self._validate()

    def _validate(self):
        if not self.lanes:
            raise MapInvalid("map has no lanes")
        for ln in self.lanes.values():
            if ln.centerline.shape[0] < 2:
                raise MapInvalid(f"lane {ln.lane_id}: centerline needs >= 2 points")
            if np.any(self._lane_seg_lengths(ln) <= 0):
                raise MapInvalid(f"lane {ln.lane_id}: repeated centerline point")
            if ln.width <= 0 or ln.speed_limit <= 0:
                raise MapInvalid(f"lane {ln.lane_id}: width and speed limit must be positive")
            for s in ln.successors:
                if s not in self.lanes:
                    raise MapInvalid(f"lane {ln.lane_id}: dangling successor id {s!r}")
                gap = np.linalg.norm(ln.centerline[-1] - self.lanes[s].centerline[0])
                if gap > SUCCESSOR_GAP:
                    raise MapInvalid(
                        f"lane {ln.lane_id} -> {s}: successor gap {gap:.3f} m > {SUCCESSOR_GAP}")
            for attr, back in (("left", "right"), ("right", "left")):
                other = getattr(ln, attr)
                if other is None:
                    continue
                if other not in self.lanes:
                    raise MapInvalid(f"lane {ln.lane_id}: dangling {attr} neighbor id {other!r}")
                if getattr(self.lanes[other], back) != ln.lane_id:
                    raise MapInvalid(
                        f"lanes {ln.lane_id}/{other}: asymmetric neighbor relation")

    @staticmethod
    def _lane_seg_lengths(ln):
        seg = np.diff(ln.centerline, axis=0)
        return np.sqrt((seg * seg).sum(axis=1))

    def lane(self, lane_id: str) -> Lane:
        try:
            return self.lanes[lane_id]
        except KeyError:
            raise UnknownLane(f"no lane {lane_id!r} in map") from None

    def lane_ids(self):
        return sorted(self.lanes)

    def centroid(self) -> np.ndarray:
        pts = np.concatenate([ln.centerline for ln in self.lanes.values()])
        return pts.mean(axis=0)


def load_hdmap(source) -> LaneGraph:
    """Parse and validate a map document (path or dict)."""
    if isinstance(source, (str, Path)):
        try:
            doc = json.loads(Path(source).read_text())
        except OSError as exc:
            raise MapFormat(f"cannot read map file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise MapFormat(f"map file is not valid JSON: {exc}") from None
    else:
        doc = source
    try:
        lane_docs = doc["lanes"]
        lanes = [Lane(d["id"], d["centerline"], d["width"], d["speed_limit"],
                      d.get("successors", ()), d.get("left"), d.get("right"))
                 for d in lane_docs]
        ids = [ln.lane_id for ln in lanes]
        features = [Feature(d["class"], np.asarray(d["polyline"], dtype=np.float64))
                    for d in doc.get("features", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise MapFormat(f"map document malformed: {exc}") from None
    if len(set(ids)) != len(ids):
        raise MapInvalid("duplicate lane ids")
    return LaneGraph(lanes, features)


def save_hdmap(graph: LaneGraph, path: Path):
    doc = {
        "lanes": [
            {
                "id": ln.lane_id,
                "centerline": [[float(c) for c in p] for p in ln.centerline],
                "width": ln.width,
                "speed_limit": ln.speed_limit,
                "successors": list(ln.successors),
                "left": ln.left,
                "right": ln.right,
            }
            for ln in (graph.lanes[i] for i in graph.lane_ids())
        ],
        "features": [
            {"class": f.feature_class,
             "polyline": [[float(c) for c in p] for p in f.polyline]}
            for f in graph.features
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# routes
# ---------------------------------------------------------------------------

MODE_START = "start"
MODE_SUCCESSOR = "successor"
MODE_CHANGE_LEFT = "lane-change-left"
MODE_CHANGE_RIGHT = "lane-change-right"


@dataclass(frozen=True)
class RouteStep:
    lane_id: str
    mode: str
    # arc length along the previous lane where a lane-change blend begins;
    # None means at entry of the previous lane
    change_at: float | None = None


@dataclass
class Route:
    steps: list
    total_cost: float
    # profile edits attached by maneuvers: (route arc s, target speed)
    speed_events: list = field(default_factory=list)
    stop_at: float | None = None

    def lane_ids(self):
        return [s.lane_id for s in self.steps]

    def goal(self) -> str:
        return self.steps[-1].lane_id

    def step_offsets(self, graph: LaneGraph):
        """Route arc length at which each step's lane begins."""
        offs = []
        acc = 0.0
        for st in self.steps:
            offs.append(acc)
            acc += graph.lane(st.lane_id).length
        return offs, acc

    def copy(self) -> "Route":
        return Route(list(self.steps), self.total_cost,
                     list(self.speed_events), self.stop_at)


def plan_route(graph: LaneGraph, start: str, goal: str) -> Route:
    """Uniform-cost search over lanes. Entering a successor costs its
    length; a lane change costs LANE_CHANGE_PENALTY plus the target length.
    Ties break on lexicographic lane id."""
    graph.lane(start), graph.lane(goal)
    best = {start: 0.0}
    prev = {start: None}
    heap = [(0.0, start)]
    visited = set()
    while heap:
        cost, lane_id = heapq.heappop(heap)
        if lane_id in visited:
            continue
        visited.add(lane_id)
        if lane_id == goal:
            break
        ln = graph.lanes[lane_id]
        edges = [(s, MODE_SUCCESSOR, graph.lanes[s].length) for s in ln.successors]
        for nb, mode in ((ln.left, MODE_CHANGE_LEFT), (ln.right, MODE_CHANGE_RIGHT)):
            if nb is not None:
                edges.append((nb, mode, LANE_CHANGE_PENALTY + graph.lanes[nb].length))
        for target, mode, edge_cost in edges:
            c = cost + edge_cost
            if target not in best or c < best[target] - 1e-12:
                best[target] = c
                prev[target] = (lane_id, mode)
                heapq.heappush(heap, (c, target))
    if goal not in visited:
        raise NoRoute(f"no route from {start!r} to {goal!r}")
    steps = []
    cur = goal
    while cur is not None:
        link = prev[cur]
        if link is None:
            steps.append(RouteStep(cur, MODE_START))
            cur = None
        else:
            steps.append(RouteStep(cur, link[1]))
            cur = link[0]
    steps.reverse()
    return Route(steps, best[goal])


@dataclass(frozen=True)
class Maneuver:
    kind: str  # lane-change-left | lane-change-right | turn-select | speed-set | stop
    trigger_s: float
    successor: str | None = None
    speed: float | None = None


def _step_index_at(graph: LaneGraph, route: Route, s: float):
    offs, total = route.step_offsets(graph)
    if not (0 <= s <= total):
        raise NoRoute(f"trigger s={s} outside route extent [0, {total:.1f}]")
    for i in range(len(route.steps) - 1, -1, -1):
        if s >= offs[i]:
            return i, offs[i]
    return 0, 0.0


def apply_maneuver(graph: LaneGraph, route: Route, m: Maneuver) -> Route:
    if m.kind == "speed-set":
        if m.speed is None or m.speed <= 0:
            raise NoRoute("speed-set needs a positive speed")
        out = route.copy()
        out.speed_events = sorted(out.speed_events + [(m.trigger_s, m.speed)])
        return out
    if m.kind == "stop":
        out = route.copy()
        out.stop_at = m.trigger_s if out.stop_at is None else min(out.stop_at, m.trigger_s)
        return out

    goal = route.goal()
    idx, lane_start = _step_index_at(graph, route, m.trigger_s)
    lane = graph.lane(route.steps[idx].lane_id)

    if m.kind in (MODE_CHANGE_LEFT, MODE_CHANGE_RIGHT):
        side = "left" if m.kind == MODE_CHANGE_LEFT else "right"
        nb = getattr(lane, side)
        if nb is None:
            raise NoNeighbor(f"lane {lane.lane_id} has no {side} neighbor")
        bridge = RouteStep(nb, m.kind, change_at=m.trigger_s - lane_start)
        kept = list(route.steps[: idx + 1])
        cost_prefix = sum(graph.lane(s.lane_id).length for s in kept[1:])
        suffix = plan_route(graph, nb, goal)
        steps = kept + [bridge] + suffix.steps[1:]
        cost = cost_prefix + LANE_CHANGE_PENALTY + graph.lane(nb).length + suffix.total_cost
        return Route(steps, cost, list(route.speed_events), route.stop_at)

    if m.kind == "turn-select":
        if m.successor is None:
            raise NotASuccessor("turn-select needs a successor id")
        # find the next branch (>= 2 successors) at or after the trigger;
        # fall back to the next lane end so a bad id still errors clearly
        branch_idx = None
        for j in range(idx, len(route.steps)):
            if len(graph.lane(route.steps[j].lane_id).successors) >= 2:
                branch_idx = j
                break
        if branch_idx is None:
            branch_idx = idx
        branch_lane = graph.lane(route.steps[branch_idx].lane_id)
        if m.successor not in branch_lane.successors:
            raise NotASuccessor(
                f"{m.successor!r} is not a successor of lane {branch_lane.lane_id}")
        kept = list(route.steps[: branch_idx + 1])
        bridge = RouteStep(m.successor, MODE_SUCCESSOR)
        cost_prefix = sum(graph.lane(s.lane_id).length for s in kept[1:])
        suffix = plan_route(graph, m.successor, goal)
        steps = kept + [bridge] + suffix.steps[1:]
        cost = cost_prefix + graph.lane(m.successor).length + suffix.total_cost
        return Route(steps, cost, list(route.speed_events), route.stop_at)

    raise NoRoute(f"unknown maneuver kind {m.kind!r}")
