"""Time-parameterized ego trajectories from planned routes.

The route's lane centerlines are densified into a single path polyline;
lane changes blend laterally with the smoothstep cubic 3u^2 - 2u^3 over a
configured arc distance. Speeds follow a trapezoid generalized by a
forward/backward pass (accelerate from rest, cruise at the per-lane cap,
brake to rest at the end), integrated exactly per path cell so sample
times are uniform in dt with no drift.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange, ProfileInvalid
from .geometry import Pose, pose_interpolate
from .hdmap import (MODE_CHANGE_LEFT, MODE_CHANGE_RIGHT, LaneGraph, Route)

# dense path resolution in meters
_DS = 0.25


@dataclass(frozen=True)
class Profile:
    cruise_speed: float = 10.0
    accel: float = 2.0
    dt: float = 0.1
    lane_change_distance: float = 30.0

    def validate(self):
        if self.cruise_speed <= 0:
            raise ProfileInvalid("cruise speed must be positive")
        if self.accel <= 0:
            raise ProfileInvalid("acceleration must be positive")
        if not (0 < self.dt <= 0.5):
            raise ProfileInvalid("dt must be in (0, 0.5]")
        if self.lane_change_distance < 10:
            raise ProfileInvalid("lane change distance must be >= 10 m")
        return self


DEFAULT_PROFILE = Profile()


@dataclass(frozen=True)
class TrajectorySample:
    time: float
    pose: Pose
    speed: float


class Trajectory:
    def __init__(self, samples, dt, lane_states):
        self.samples = list(samples)
        self.dt = float(dt)
        # per sample: (lane id, arc length within that lane) for corridor queries
        self.lane_states = list(lane_states)

    @property
    def duration(self) -> float:
        return self.samples[-1].time - self.samples[0].time

    @property
    def t0(self) -> float:
        return self.samples[0].time

    @property
    def t_end(self) -> float:
        return self.samples[-1].time

    def _locate(self, t: float):
        if t < self.t0 - 1e-9 or t > self.t_end + 1e-9:
            raise OutOfRange(
                f"t={t:.3f} outside trajectory extent [{self.t0:.3f}, {self.t_end:.3f}]")
        t = min(max(t, self.t0), self.t_end)
        i = min(int((t - self.t0) / self.dt), len(self.samples) - 2)
        u = (t - self.samples[i].time) / self.dt
        return i, min(max(u, 0.0), 1.0)

    def pose_at(self, t: float) -> Pose:
        if len(self.samples) == 1:
            return self.samples[0].pose
        i, u = self._locate(t)
        return pose_interpolate(self.samples[i].pose, self.samples[i + 1].pose, u)

    def speed_at(self, t: float) -> float:
        if len(self.samples) == 1:
            return self.samples[0].speed
        i, u = self._locate(t)
        return self.samples[i].speed * (1 - u) + self.samples[i + 1].speed * u

    def lane_state_at(self, t: float):
        """(lane id, arc length, speed) for leader-gap queries."""
        if len(self.samples) == 1:
            lane, s = self.lane_states[0]
            return lane, s, self.samples[0].speed
        i, u = self._locate(t)
        lane_a, s_a = self.lane_states[i]
        lane_b, s_b = self.lane_states[i + 1]
        if lane_a == lane_b:
            return lane_a, s_a * (1 - u) + s_b * u, self.speed_at(t)
        return (lane_a, s_a, self.speed_at(t)) if u < 0.5 else (lane_b, s_b, self.speed_at(t))


def _smoothstep(u: np.ndarray) -> np.ndarray:
    return u * u * (3.0 - 2.0 * u)


def _build_dense_path(graph: LaneGraph, route: Route, d_lc: float):
    """Densify the route into path points with per-point lane ownership
    and speed caps. Returns (points, lane ids, lane arcs, caps)."""
    pts, owners, arcs, caps = [], [], [], []

    def emit(lane, s_vals, p_vals=None, cap=None):
        p = lane.points_at(np.asarray(s_vals)) if p_vals is None else p_vals
        for j, s in enumerate(s_vals):
            pts.append(p[j])
            owners.append(lane.lane_id)
            arcs.append(float(s))
            caps.append(lane.speed_limit if cap is None else cap)

    steps = route.steps
    cur = graph.lane(steps[0].lane_id)
    s = 0.0
    i = 0
    while i < len(steps):
        nxt = steps[i + 1] if i + 1 < len(steps) else None
        if nxt is not None and nxt.mode in (MODE_CHANGE_LEFT, MODE_CHANGE_RIGHT):
            tgt = graph.lane(nxt.lane_id)
            s0 = s if nxt.change_at is None else max(s, min(nxt.change_at, cur.length))
            if s0 > s:
                emit(cur, np.arange(s, s0, _DS))
            src_anchor = cur.point_at(s0)
            sb0 = tgt.project(src_anchor)
            d_eff = max(min(d_lc, cur.length - s0, tgt.length - sb0), _DS)
            sb = np.arange(0.0, d_eff, _DS)
            u = sb / d_eff
            w = _smoothstep(u)
            p_src = cur.points_at(s0 + sb)
            p_tgt = tgt.points_at(sb0 + sb)
            blend = p_src * (1.0 - w)[:, None] + p_tgt * w[:, None]
            cap = min(cur.speed_limit, tgt.speed_limit)
            for j in range(len(sb)):
                pts.append(blend[j])
                if u[j] < 0.5:
                    owners.append(cur.lane_id)
                    arcs.append(float(s0 + sb[j]))
                else:
                    owners.append(tgt.lane_id)
                    arcs.append(float(sb0 + sb[j]))
                caps.append(cap)
            cur = tgt
            s = sb0 + d_eff
            i += 1
        elif nxt is not None:
            emit(cur, np.arange(s, cur.length, _DS))
            cur = graph.lane(nxt.lane_id)
            s = 0.0
            i += 1
        else:
            s_vals = np.append(np.arange(s, cur.length, _DS), cur.length)
            emit(cur, s_vals)
            i += 1

    points = np.asarray(pts)
    # drop zero-length cells so arc parameterization is strictly increasing
    keep = [0]
    for j in range(1, len(points)):
        if np.linalg.norm(points[j] - points[keep[-1]]) > 1e-9:
            keep.append(j)
    keep = np.asarray(keep)
    return (points[keep], [owners[j] for j in keep],
            [arcs[j] for j in keep], np.asarray(caps)[keep])


def _speed_profile(cum, caps, route: Route, v_c: float, a: float):
    """Per-node speeds: min(cap, forward accel limit, backward brake limit)."""
    user = np.full(len(cum), v_c)
    for s_ev, v_ev in sorted(route.speed_events):
        user[cum >= s_ev - 1e-9] = v_ev
    cap = np.minimum(caps, user)
    v = cap.copy()
    v[0] = 0.0
    ds = np.diff(cum)
    for j in range(len(ds)):
        v[j + 1] = min(v[j + 1], math.sqrt(v[j] * v[j] + 2.0 * a * ds[j]))
    v[-1] = 0.0
    for j in range(len(ds) - 1, -1, -1):
        v[j] = min(v[j], math.sqrt(v[j + 1] * v[j + 1] + 2.0 * a * ds[j]))
    return v, cap


def _cell_schedule(cum, v, cap, a):
    """Exact accel/cruise/brake split per cell; returns cumulative times
    plus per-cell phase data for inverting s(t)."""
    ds = np.diff(cum)
    v0, v1 = v[:-1], v[1:]
    cap_cell = np.minimum(cap[:-1], cap[1:])
    vp = np.sqrt(np.maximum((2.0 * a * ds + v0 * v0 + v1 * v1) * 0.5, 0.0))
    vp = np.minimum(vp, cap_cell)
    vp = np.maximum(vp, np.maximum(v0, v1))
    d_acc = (vp * vp - v0 * v0) / (2.0 * a)
    d_dec = (vp * vp - v1 * v1) / (2.0 * a)
    d_cru = np.maximum(ds - d_acc - d_dec, 0.0)
    t_acc = (vp - v0) / a
    t_dec = (vp - v1) / a
    with np.errstate(divide="ignore", invalid="ignore"):
        t_cru = np.where(vp > 1e-12, d_cru / np.where(vp > 1e-12, vp, 1.0), 0.0)
    dt_cell = t_acc + t_cru + t_dec
    T = np.concatenate([[0.0], np.cumsum(dt_cell)])
    return T, (v0, vp, t_acc, t_cru, t_dec, d_acc, d_cru)


def _s_and_v_at_time(t, T, cum, phases, a):
    v0, vp, t_acc, t_cru, t_dec, d_acc, d_cru = phases
    k = min(bisect.bisect_right(T, t) - 1, len(T) - 2)
    k = max(k, 0)
    tau = t - T[k]
    if tau <= t_acc[k]:
        return cum[k] + v0[k] * tau + 0.5 * a * tau * tau, v0[k] + a * tau
    tau -= t_acc[k]
    if tau <= t_cru[k]:
        return cum[k] + d_acc[k] + vp[k] * tau, vp[k]
    tau -= t_cru[k]
    tau = min(tau, t_dec[k])
    return (cum[k] + d_acc[k] + d_cru[k] + vp[k] * tau - 0.5 * a * tau * tau,
            max(vp[k] - a * tau, 0.0))


def generate_trajectory(graph: LaneGraph, route: Route,
                        profile: Profile = DEFAULT_PROFILE) -> Trajectory:
    profile.validate()
    points, owners, arcs, caps = _build_dense_path(
        graph, route, profile.lane_change_distance)

    seg = np.diff(points, axis=0)
    cum = np.concatenate([[0.0], np.cumsum(np.sqrt((seg * seg).sum(axis=1)))])

    if route.stop_at is not None and route.stop_at < cum[-1]:
        stop = max(float(route.stop_at), float(cum[1]))
        n_keep = int(np.searchsorted(cum, stop, side="left"))
        n_keep = max(n_keep, 1)
        # cut the path at the stop arc, interpolating the final point
        j = min(n_keep, len(cum) - 1)
        f = (stop - cum[j - 1]) / max(cum[j] - cum[j - 1], 1e-12)
        end_pt = points[j - 1] + (points[j] - points[j - 1]) * f
        points = np.concatenate([points[:j], end_pt[None, :]])
        owners = owners[:j] + [owners[j - 1]]
        arcs = arcs[:j] + [arcs[j - 1] + f * _DS]
        caps = np.concatenate([caps[:j], caps[j - 1:j]])
        seg = np.diff(points, axis=0)
        cum = np.concatenate([[0.0], np.cumsum(np.sqrt((seg * seg).sum(axis=1)))])

    v, cap = _speed_profile(cum, caps, route, profile.cruise_speed, profile.accel)
    T, phases = _cell_schedule(cum, v, cap, profile.accel)
    total_time = float(T[-1])

    dt = profile.dt
    n_intervals = max(int(math.ceil(total_time / dt - 1e-3)), 1)

    def yaw_at(s):
        j = min(max(int(np.searchsorted(cum, s, side="right")) - 1, 0), len(seg) - 1)
        d = seg[j]
        return math.atan2(d[1], d[0])

    def lane_state(s):
        j = min(max(int(np.searchsorted(cum, s, side="right")) - 1, 0), len(points) - 1)
        return owners[j], arcs[j]

    def point_at(s):
        j = min(max(int(np.searchsorted(cum, s, side="right")) - 1, 0), len(seg) - 1)
        den = cum[j + 1] - cum[j]
        f = (s - cum[j]) / den if den > 0 else 0.0
        return points[j] + seg[j] * min(max(f, 0.0), 1.0)

    samples, lane_states = [], []
    for k in range(n_intervals):
        t = k * dt
        s_k, v_k = _s_and_v_at_time(min(t, total_time), T, cum, phases, profile.accel)
        p = point_at(s_k)
        samples.append(TrajectorySample(t, Pose.from_point_yaw(p, yaw_at(s_k)), float(v_k)))
        lane_states.append(lane_state(s_k))
    # final sample pinned to the route end at rest
    end_s = float(cum[-1])
    samples.append(TrajectorySample(
        n_intervals * dt, Pose.from_point_yaw(points[-1], yaw_at(end_s)), 0.0))
    lane_states.append(lane_state(end_s))
    return Trajectory(samples, dt, lane_states)
