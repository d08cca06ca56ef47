"""Independent oracles the engine is checked against.

Everything here is deliberately naive: closed-form intersections,
exhaustive path enumeration, finite differences. Nothing imports the
engine's tracing or search code, so agreement is evidence rather than
tautology. Frozen; do not "fix" an oracle to make a test pass.
"""

from __future__ import annotations

import math

LANE_CHANGE_COST = 25.0  # documented lane-change penalty, restated here


# ---------------------------------------------------------------------------
# closed-form ray intersections (unit direction assumed)
# ---------------------------------------------------------------------------

def ray_sphere(origin, direction, center, radius):
    """Smallest t >= 0 with |o + t*d - c| = r, or None."""
    ox = origin[0] - center[0]
    oy = origin[1] - center[1]
    oz = origin[2] - center[2]
    b = ox * direction[0] + oy * direction[1] + oz * direction[2]
    c = ox * ox + oy * oy + oz * oz - radius * radius
    disc = b * b - c
    if disc < 0.0:
        return None
    s = math.sqrt(disc)
    t1 = -b - s
    if t1 >= 0.0:
        return t1
    t2 = -b + s
    if t2 >= 0.0:
        return t2
    return None


def ray_plane(origin, direction, normal, offset):
    """t >= 0 where the ray meets n.p = offset; parallel rays miss."""
    denom = (normal[0] * direction[0] + normal[1] * direction[1]
             + normal[2] * direction[2])
    if abs(denom) < 1e-15:
        return None
    num = offset - (normal[0] * origin[0] + normal[1] * origin[1]
                    + normal[2] * origin[2])
    t = num / denom
    return t if t >= 0.0 else None


def sphere_clearance(origin, direction, center, radius, t_max):
    """min over t in [0, t_max] of the signed distance to the sphere.

    |o + t*d - c| is convex in t, so the minimum sits at the clamped
    closest-approach parameter."""
    ox = origin[0] - center[0]
    oy = origin[1] - center[1]
    oz = origin[2] - center[2]
    tc = -(ox * direction[0] + oy * direction[1] + oz * direction[2])
    tc = min(max(tc, 0.0), t_max)
    px = ox + tc * direction[0]
    py = oy + tc * direction[1]
    pz = oz + tc * direction[2]
    return math.sqrt(px * px + py * py + pz * pz) - radius


def plane_clearance(origin, direction, normal, offset, t_max):
    """min over t in [0, t_max] of the signed plane distance (linear in t)."""
    v0 = (normal[0] * origin[0] + normal[1] * origin[1]
          + normal[2] * origin[2]) - offset
    rate = (normal[0] * direction[0] + normal[1] * direction[1]
            + normal[2] * direction[2])
    return min(v0, v0 + rate * t_max)


# ---------------------------------------------------------------------------
# exhaustive route costs
# ---------------------------------------------------------------------------

def brute_force_route_cost(lanes: dict, start: str, goal: str) -> float:
    """Minimum cost over all simple paths.

    lanes maps id -> dict with keys length, successors, left, right.
    Edge costs: successor = target length; lane change = penalty + target
    length. Returns math.inf when the goal is unreachable.
    """
    best = [0.0 if start == goal else math.inf]

    def walk(cur, cost, seen):
        if cost >= best[0]:
            return
        if cur == goal:
            best[0] = cost
            return
        ln = lanes[cur]
        for nxt in ln["successors"]:
            if nxt not in seen:
                walk(nxt, cost + lanes[nxt]["length"], seen | {nxt})
        for nb in (ln.get("left"), ln.get("right")):
            if nb is not None and nb not in seen:
                walk(nb, cost + LANE_CHANGE_COST + lanes[nb]["length"], seen | {nb})

    walk(start, 0.0, {start})
    return best[0]


def graph_as_dicts(graph) -> dict:
    """Flatten a LaneGraph into the plain-dict shape brute force wants."""
    return {
        lid: {
            "length": graph.lanes[lid].length,
            "successors": list(graph.lanes[lid].successors),
            "left": graph.lanes[lid].left,
            "right": graph.lanes[lid].right,
        }
        for lid in graph.lanes
    }


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def fd_gradient(f, p, h=1e-6):
    """Central-difference gradient of a scalar field f((x, y, z)) -> float."""
    g = []
    for ax in range(3):
        hi = list(p)
        lo = list(p)
        hi[ax] += h
        lo[ax] -= h
        g.append((f(hi) - f(lo)) / (2.0 * h))
    return g
