"""Lane-graph traffic: seeded spawning and IDM car-following.

Agents follow fixed successor routes; only the ego (driven by its
precomputed trajectory) is externally scripted. Updates are synchronous:
all accelerations are computed from the pre-step state, so results do not
depend on agent iteration order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import Invalid, SpawnInfeasible
from .geometry import Pose
from .hdmap import MODE_START, MODE_SUCCESSOR, LaneGraph, Route, RouteStep

# leader search window, bumper-to-bumper meters
LEADER_WINDOW = 150.0
# minimum route length for spawned agents (unless a dead end cuts it short)
MIN_AGENT_ROUTE = 200.0
FREE_ROAD = math.inf


@dataclass(frozen=True)
class TrafficParams:
    v0: float = 12.0
    headway: float = 1.5
    s0: float = 2.0
    a_max: float = 1.5
    b: float = 2.0
    delta: float = 4.0
    dt: float = 0.05

    def validate(self):
        vals = (self.v0, self.headway, self.s0, self.a_max, self.b, self.delta, self.dt)
        if any(v <= 0 for v in vals):
            raise Invalid("traffic parameters must all be positive")
        if self.dt > 0.1:
            raise Invalid("traffic dt must be <= 0.1 s")
        return self


@dataclass(frozen=True)
class DensityPreset:
    name: str
    count: int

    def __post_init__(self):
        if self.count < 0:
            raise Invalid("agent count must be >= 0")


DENSITY_PRESETS = {
    "ego-only": DensityPreset("ego-only", 0),
    "few": DensityPreset("few", 5),
    "many": DensityPreset("many", 25),
}


@dataclass
class Agent:
    agent_id: int
    asset_id: str
    length: float
    lane_id: str
    s: float
    v: float
    route: Route
    step_idx: int = 0
    alive: bool = True


def idm_accel(v: float, v_lead: float, gap: float, p: TrafficParams) -> float:
    """Intelligent Driver Model acceleration; gap may be +inf for free road."""
    s_star = p.s0 + v * p.headway + v * (v - v_lead) / (2.0 * math.sqrt(p.a_max * p.b))
    s_star = max(s_star, p.s0)
    inter = 0.0 if math.isinf(gap) else (s_star / gap) ** 2
    a = p.a_max * (1.0 - (v / p.v0) ** p.delta - inter)
    return max(a, -3.0 * p.b)


def _random_route(graph: LaneGraph, start: str, start_s: float, rng) -> Route:
    """Successor walk of at least MIN_AGENT_ROUTE meters past the spawn
    point, ending early only at dead ends."""
    steps = [RouteStep(start, MODE_START)]
    cur = graph.lane(start)
    traveled = cur.length - start_s
    cost = 0.0
    while traveled < MIN_AGENT_ROUTE and cur.successors:
        nxt = sorted(cur.successors)[int(rng.integers(len(cur.successors)))]
        steps.append(RouteStep(nxt, MODE_SUCCESSOR))
        cur = graph.lane(nxt)
        traveled += cur.length
        cost += cur.length
    return Route(steps, cost)


def spawn(graph: LaneGraph, preset: DensityPreset, assets, seed: int,
          params: TrafficParams = TrafficParams()) -> list:
    """Seeded placement of `preset.count` agents with pairwise same-lane
    clearance; raises SpawnInfeasible after 1000 rejected draws."""
    params.validate()
    rng = np.random.default_rng(seed)
    lane_ids = graph.lane_ids()
    asset_ids = assets.ids()
    if preset.count > 0 and not asset_ids:
        raise SpawnInfeasible("no assets to spawn")
    agents: list[Agent] = []
    rejects = 0
    while len(agents) < preset.count:
        lane_id = lane_ids[int(rng.integers(len(lane_ids)))]
        lane = graph.lane(lane_id)
        s = float(rng.uniform(0.0, lane.length))
        asset_id = asset_ids[int(rng.integers(len(asset_ids)))]
        length = float(assets.get(asset_id).bbox[0])
        ok = True
        for other in agents:
            if other.lane_id != lane_id:
                continue
            bumper = abs(other.s - s) - (other.length + length) / 2.0
            if bumper < params.s0 + max(other.length, length):
                ok = False
                break
        if not ok:
            rejects += 1
            if rejects >= 1000:
                raise SpawnInfeasible(
                    f"placed {len(agents)}/{preset.count} agents after 1000 rejections")
            continue
        route = _random_route(graph, lane_id, s, rng)
        agents.append(Agent(len(agents) + 1, asset_id, length, lane_id, s, 0.0, route))
    return agents


class TrafficWorld:
    """Mutable stepping state; emits immutable per-step views."""

    def __init__(self, graph: LaneGraph, agents, params: TrafficParams,
                 ego=None, ego_length: float = 4.5):
        self.graph = graph
        self.agents = sorted((a for a in agents), key=lambda a: a.agent_id)
        self.params = params.validate()
        self.ego = ego
        self.ego_length = float(ego_length)
        self.time = 0.0

    # ------------------------------------------------------------------

    def _corridor(self, agent: Agent):
        """Lanes ahead of the agent along its route, with corridor offsets
        (corridor coordinate 0 = start of the agent's current lane)."""
        out = []
        offset = 0.0
        idx = agent.step_idx
        steps = agent.route.steps
        while idx < len(steps):
            lane = self.graph.lane(steps[idx].lane_id)
            out.append((lane.lane_id, offset))
            offset += lane.length
            if offset - agent.s > LEADER_WINDOW + 50.0:
                break
            idx += 1
        return out

    def _leader_gap(self, agent: Agent, ego_state):
        """Bumper-to-bumper gap and speed of the nearest leader within the
        search window, or (inf, 0) on a free road."""
        best_gap = FREE_ROAD
        best_v = 0.0
        candidates = []
        for lane_id, offset in self._corridor(agent):
            for other in self.agents:
                if other.agent_id == agent.agent_id or not other.alive:
                    continue
                if other.lane_id == lane_id:
                    candidates.append((offset + other.s, other.length, other.v))
            if ego_state is not None and ego_state[0] == lane_id:
                candidates.append((offset + ego_state[1], self.ego_length, ego_state[2]))
        for arc, length, v in candidates:
            dist = arc - agent.s
            if dist <= 0:
                continue
            bumper = dist - (agent.length + length) / 2.0
            if bumper <= LEADER_WINDOW and bumper < best_gap:
                best_gap = max(bumper, 0.01)
                best_v = v
        return best_gap, best_v

    def _ego_state(self):
        if self.ego is None:
            return None
        t = min(self.time, self.ego.t_end)
        return self.ego.lane_state_at(t)

    def step(self):
        p = self.params
        ego_state = self._ego_state()
        live = [a for a in self.agents if a.alive]
        accels = []
        for a in live:
            gap, v_lead = self._leader_gap(a, ego_state)
            accels.append(idm_accel(a.v, v_lead, gap, p))
        for a, acc in zip(live, accels):
            a.v = max(0.0, a.v + acc * p.dt)
            a.s = a.s + a.v * p.dt
            lane = self.graph.lane(a.lane_id)
            while a.s > lane.length:
                if a.step_idx + 1 < len(a.route.steps):
                    a.s -= lane.length
                    a.step_idx += 1
                    a.lane_id = a.route.steps[a.step_idx].lane_id
                    lane = self.graph.lane(a.lane_id)
                else:
                    a.alive = False
                    break
        self.time += p.dt

    def run_until(self, t: float):
        while self.time < t - 1e-9:
            self.step()

    # ------------------------------------------------------------------

    def agent_states(self):
        """Immutable numeric state rows (id, asset, lane, s, v), live only."""
        return [(a.agent_id, a.asset_id, a.lane_id, a.s, a.v)
                for a in self.agents if a.alive]

    def agent_poses(self):
        """(agent id, asset id, Pose, speed) with yaw from the lane tangent."""
        out = []
        for a in self.agents:
            if not a.alive:
                continue
            lane = self.graph.lane(a.lane_id)
            pos = lane.point_at(a.s)
            ahead = lane.point_at(min(a.s + 0.5, lane.length))
            behind = lane.point_at(max(a.s - 0.5, 0.0))
            d = ahead - behind
            yaw = math.atan2(d[1], d[0])
            out.append((a.agent_id, a.asset_id, Pose.from_point_yaw(pos, yaw), a.v))
        return out
