import math

import numpy as np
import pytest

from oasim.errors import Invalid, SpawnInfeasible
from oasim.hdmap import (MODE_START, MODE_SUCCESSOR, Lane, LaneGraph,
                         Maneuver, Route, RouteStep, apply_maneuver, plan_route)
from oasim.sampledata import demo_assets, demo_map
from oasim.traffic import (DENSITY_PRESETS, LEADER_WINDOW, MIN_AGENT_ROUTE,
                           Agent, DensityPreset, TrafficParams, TrafficWorld,
                           idm_accel, spawn)
from oasim.trajectory import Profile, generate_trajectory

from test_hdmap import _line, ladder_graph

P = TrafficParams()


def long_lane_graph():
    return LaneGraph([Lane("L", _line(0, 1000, 0, n=3), 3.5, 30)])


def _straight_agent(aid, s, lane="L", length=4.5, v=0.0):
    route = Route([RouteStep(lane, MODE_START)], 0.0)
    return Agent(aid, "car", length, lane, s, v, route)


# ---------------------------------------------------------------------------
# parameters and presets
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kw", [
    {"v0": 0.0}, {"headway": -1.0}, {"s0": 0.0}, {"a_max": 0.0},
    {"b": -2.0}, {"delta": 0.0}, {"dt": 0.0}, {"dt": 0.2},
])
def test_params_validation(kw):
    with pytest.raises(Invalid):
        TrafficParams(**kw).validate()


def test_density_presets():
    assert DENSITY_PRESETS["ego-only"].count == 0
    assert DENSITY_PRESETS["few"].count == 5
    assert DENSITY_PRESETS["many"].count == 25
    with pytest.raises(Invalid):
        DensityPreset("bad", -1)


# ---------------------------------------------------------------------------
# car-following law
# ---------------------------------------------------------------------------

def test_idm_free_road_behavior():
    assert idm_accel(0.0, 0.0, math.inf, P) == pytest.approx(P.a_max)
    assert idm_accel(P.v0, 0.0, math.inf, P) == pytest.approx(0.0, abs=1e-12)
    assert idm_accel(P.v0 + 2.0, 0.0, math.inf, P) < 0.0
    # monotone decreasing in own speed
    a_prev = math.inf
    for v in np.linspace(0, P.v0, 10):
        a = idm_accel(float(v), 0.0, math.inf, P)
        assert a < a_prev
        a_prev = a


def test_idm_brakes_harder_when_closing():
    closing = idm_accel(10.0, 0.0, 20.0, P)
    matched = idm_accel(10.0, 10.0, 20.0, P)
    assert closing < matched < idm_accel(10.0, 10.0, math.inf, P)


def test_idm_braking_floor():
    assert idm_accel(30.0, 0.0, 0.01, P) == -3.0 * P.b
    for v in (0.0, 5.0, 20.0):
        for gap in (0.01, 1.0, 5.0, math.inf):
            assert idm_accel(v, 0.0, gap, P) >= -3.0 * P.b


def test_idm_equilibrium_gap():
    # at the equilibrium gap s* the interaction exactly cancels free accel
    v = 8.0
    s_star = P.s0 + v * P.headway
    a_free = P.a_max * (1.0 - (v / P.v0) ** P.delta)
    gap_eq = s_star / math.sqrt(a_free / P.a_max)
    assert idm_accel(v, v, gap_eq, P) == pytest.approx(0.0, abs=1e-12)
    assert idm_accel(v, v, gap_eq * 0.8, P) < 0.0
    assert idm_accel(v, v, gap_eq * 1.2, P) > 0.0


# ---------------------------------------------------------------------------
# spawning
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("name", ["ego-only", "few", "many"])
def test_spawn_count_matches_preset(name):
    agents = spawn(demo_map(), DENSITY_PRESETS[name], demo_assets(), seed=3)
    assert len(agents) == DENSITY_PRESETS[name].count
    assert [a.agent_id for a in agents] == list(range(1, len(agents) + 1))
    assert all(a.v == 0.0 for a in agents)


def test_spawn_is_seed_deterministic():
    a = spawn(demo_map(), DENSITY_PRESETS["many"], demo_assets(), seed=11)
    b = spawn(demo_map(), DENSITY_PRESETS["many"], demo_assets(), seed=11)
    c = spawn(demo_map(), DENSITY_PRESETS["many"], demo_assets(), seed=12)
    key = lambda ag: (ag.lane_id, ag.s, ag.asset_id, ag.route.lane_ids())
    assert [key(x) for x in a] == [key(x) for x in b]
    assert [key(x) for x in a] != [key(x) for x in c]


def test_spawn_clearance_holds_pairwise():
    agents = spawn(demo_map(), DENSITY_PRESETS["many"], demo_assets(), seed=5)
    for i, a in enumerate(agents):
        for b in agents[i + 1:]:
            if a.lane_id != b.lane_id:
                continue
            bumper = abs(a.s - b.s) - (a.length + b.length) / 2.0
            assert bumper >= P.s0 + max(a.length, b.length) - 1e-9


def test_spawn_routes_are_long_enough():
    g = demo_map()
    for a in spawn(g, DENSITY_PRESETS["many"], demo_assets(), seed=9):
        lanes = a.route.lane_ids()
        traveled = g.lane(lanes[0]).length - a.s
        traveled += sum(g.lane(l).length for l in lanes[1:])
        dead_end = not g.lane(lanes[-1]).successors
        assert traveled >= MIN_AGENT_ROUTE or dead_end


def test_spawn_infeasible_on_crowded_map():
    tiny = LaneGraph([Lane("only", _line(0, 30, 0), 3.5, 10)])
    with pytest.raises(SpawnInfeasible):
        spawn(tiny, DENSITY_PRESETS["many"], demo_assets(), seed=1)


def test_spawn_without_assets():
    empty = demo_assets().__class__()
    assert spawn(demo_map(), DENSITY_PRESETS["ego-only"], empty, seed=1) == []
    with pytest.raises(SpawnInfeasible):
        spawn(demo_map(), DENSITY_PRESETS["few"], empty, seed=1)


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

def test_single_agent_approaches_free_speed():
    g = demo_map()
    agents = [Agent(1, "car", 4.5, "ring-a-0", 10.0, 0.0,
                    Route([RouteStep("ring-a-0", MODE_START)] +
                          [RouteStep(f"ring-a-{i % 4}", MODE_SUCCESSOR)
                           for i in range(1, 40)], 0.0))]
    world = TrafficWorld(g, agents, P)
    world.run_until(60.0)
    assert agents[0].alive
    assert 11.8 <= agents[0].v <= P.v0 + 1e-9


def test_step_is_synchronous():
    # accelerations must come from the pre-step state of both agents
    g = long_lane_graph()
    a, b = _straight_agent(1, 0.0), _straight_agent(2, 20.0)
    world = TrafficWorld(g, [a, b], P)
    gap_ab = 20.0 - 4.5  # bumper to bumper
    exp_a = idm_accel(0.0, 0.0, gap_ab, P)
    exp_b = idm_accel(0.0, 0.0, math.inf, P)
    world.step()
    assert a.v == pytest.approx(max(0.0, exp_a * P.dt))
    assert b.v == pytest.approx(exp_b * P.dt)
    assert a.s == pytest.approx(0.0 + a.v * P.dt)
    assert b.s == pytest.approx(20.0 + b.v * P.dt)
    assert world.time == pytest.approx(P.dt)


def test_leader_beyond_window_is_ignored():
    g = long_lane_graph()
    a = _straight_agent(1, 0.0)
    b = _straight_agent(2, LEADER_WINDOW + 60.0)
    world = TrafficWorld(g, [a, b], P)
    world.step()
    assert a.v == pytest.approx(P.a_max * P.dt)  # free road


def test_leader_seen_across_successor_boundary():
    g = ladder_graph()
    route = Route([RouteStep("a1", MODE_START), RouteStep("a2", MODE_SUCCESSOR)], 100.0)
    a = Agent(1, "car", 4.5, "a1", 95.0, 0.0, route)
    b = Agent(2, "car", 4.5, "a2", 10.0, 0.0,
              Route([RouteStep("a2", MODE_START)], 0.0))
    world = TrafficWorld(g, [a, b], P)
    gap = (100.0 + 10.0 - 95.0) - 4.5
    assert world._leader_gap(a, None) == (pytest.approx(gap), 0.0)


def test_agent_crosses_lane_boundary_and_dies_at_route_end():
    g = ladder_graph()
    route = Route([RouteStep("a1", MODE_START), RouteStep("a2", MODE_SUCCESSOR)], 100.0)
    a = Agent(1, "car", 4.5, "a1", 98.0, 0.0, route)
    world = TrafficWorld(g, [a], P)
    world.run_until(5.0)
    assert a.alive and a.lane_id == "a2"
    assert a.s == pytest.approx(world.time * 0.0 + a.s)  # still on route
    world.run_until(60.0)
    assert not a.alive
    assert world.agent_states() == []


def test_world_is_deterministic():
    g = demo_map()
    params = TrafficParams()

    def run():
        agents = spawn(g, DENSITY_PRESETS["many"], demo_assets(), seed=21)
        world = TrafficWorld(g, agents, params)
        states = []
        for _ in range(200):
            world.step()
            states.append(world.agent_states())
        return states

    assert run() == run()


def test_speeds_and_positions_stay_sane():
    g = demo_map()
    agents = spawn(g, DENSITY_PRESETS["many"], demo_assets(), seed=2)
    world = TrafficWorld(g, agents, P)
    for _ in range(600):
        world.step()
        for aid, asset, lane_id, s, v in world.agent_states():
            assert 0.0 <= v <= P.v0 + 1e-9
            assert -1e-9 <= s <= g.lane(lane_id).length + 1e-9


def test_agents_queue_behind_parked_ego():
    g = ladder_graph()
    route = apply_maneuver(g, plan_route(g, "a1", "a3"), Maneuver("stop", trigger_s=60.0))
    ego = generate_trajectory(g, route, Profile())
    follower = _straight_agent(1, 0.0, lane="a1")
    follower.route = Route([RouteStep("a1", MODE_START),
                            RouteStep("a2", MODE_SUCCESSOR)], 100.0)
    world = TrafficWorld(g, [follower], P, ego=ego, ego_length=4.5)
    world.run_until(60.0)
    assert follower.alive and follower.lane_id == "a1"
    bumper = (60.0 - follower.s) - 4.5
    assert 0.5 <= bumper <= 4.0       # settled near the standstill distance
    assert follower.v < 0.05          # essentially stopped


def test_agent_poses_follow_lane_tangent():
    g = demo_map()
    a = Agent(1, "car", 4.6, "ring-a-0", 30.0, 3.0,
              Route([RouteStep("ring-a-0", MODE_START)], 0.0))
    world = TrafficWorld(g, [a], P)
    (aid, asset, pose, v), = world.agent_poses()
    assert (aid, asset, v) == (1, "car", 3.0)
    pos = pose.translation
    heading = np.array([math.cos(pose.yaw), math.sin(pose.yaw), 0.0])
    radial = np.array([pos[0], pos[1], 0.0]) / np.hypot(pos[0], pos[1])
    assert abs(heading @ radial) < 0.05          # tangent to the ring
    assert np.hypot(pos[0], pos[1]) == pytest.approx(60.0, abs=0.05)
