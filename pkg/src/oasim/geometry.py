"""Rigid-body poses and quaternion helpers.

Conventions: right-handed, z-up world. Vehicle frame is +x forward, +y left,
+z up. Quaternions are stored (w, x, y, z) and kept unit-norm. Angles are
radians throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import Invalid

_QUAT_NORM_TOL = 1e-9


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    n = float(np.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]))
    if n < 1e-12:
        raise Invalid("quaternion norm is zero")
    return q / n


def quat_multiply(a, b) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        dtype=np.float64,
    )


def quat_conjugate(q) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]], dtype=np.float64)


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ],
        dtype=np.float64,
    )


def quat_from_matrix(m) -> np.ndarray:
    """Shepperd's method; returns (w, x, y, z) with w >= 0."""
    m = np.asarray(m, dtype=np.float64)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] >= m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    if q[0] < 0:
        q = -q
    return quat_normalize(q)


def quat_from_yaw(yaw: float) -> np.ndarray:
    h = 0.5 * yaw
    return np.array([np.cos(h), 0.0, 0.0, np.sin(h)], dtype=np.float64)


def quat_slerp(q0, q1, u: float) -> np.ndarray:
    """Spherical interpolation along the shorter arc; linear fallback when nearly parallel."""
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    d = float(np.dot(q0, q1))
    if d < 0.0:
        q1 = -q1
        d = -d
    if d > 1.0 - 1e-12:
        return quat_normalize(q0 + u * (q1 - q0))
    theta = np.arccos(min(d, 1.0))
    s = np.sin(theta)
    return quat_normalize((np.sin((1.0 - u) * theta) / s) * q0 + (np.sin(u * theta) / s) * q1)


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform: rotation then translation (local -> parent frame)."""

    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        q = quat_normalize(self.rotation)
        if abs(float(np.linalg.norm(q)) - 1.0) > _QUAT_NORM_TOL:
            raise Invalid("quaternion could not be normalized to unit length")
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "rotation", q)

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    @staticmethod
    def from_xyz_yaw(x: float, y: float, z: float, yaw: float = 0.0) -> "Pose":
        return Pose(np.array([x, y, z], dtype=np.float64), quat_from_yaw(yaw))

    @staticmethod
    def from_point_yaw(p, yaw: float = 0.0) -> "Pose":
        return Pose(np.asarray(p, dtype=np.float64).reshape(3), quat_from_yaw(yaw))

    def matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    def compose(self, other: "Pose") -> "Pose":
        """self applied after other: world = self o other (other is expressed in self's frame)."""
        r = self.matrix()
        t = self.translation + r @ other.translation
        return Pose(t, quat_multiply(self.rotation, other.rotation))

    def inverse(self) -> "Pose":
        r = self.matrix()
        qi = quat_conjugate(self.rotation)
        return Pose(-(r.T @ self.translation), qi)

    def transform_point(self, p) -> np.ndarray:
        return self.translation + self.matrix() @ np.asarray(p, dtype=np.float64)

    def transform_points(self, pts: np.ndarray) -> np.ndarray:
        return pts @ self.matrix().T + self.translation

    @property
    def yaw(self) -> float:
        m = self.matrix()
        return float(np.arctan2(m[1, 0], m[0, 0]))

    def to_dict(self) -> dict:
        return {
            "translation": [float(v) for v in self.translation],
            "rotation_wxyz": [float(v) for v in self.rotation],
        }

    @staticmethod
    def from_dict(d: dict) -> "Pose":
        return Pose(np.asarray(d["translation"], dtype=np.float64), np.asarray(d["rotation_wxyz"], dtype=np.float64))


def pose_interpolate(p0: Pose, p1: Pose, u: float) -> Pose:
    """Linear translation, slerp rotation."""
    t = p0.translation + u * (p1.translation - p0.translation)
    return Pose(t, quat_slerp(p0.rotation, p1.rotation, u))


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = (a + np.pi) % (2.0 * np.pi) - np.pi
    if a == -np.pi:
        a = np.pi
    return float(a)
