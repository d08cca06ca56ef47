"""Signed-distance fields: analytic primitives, unions, and sampled grids.

All fields evaluate batches of points, shape (N, 3) float64, and return
(N,) signed distances in meters (negative inside). Every field declares a
Lipschitz bound >= 1 that its values satisfy, which the sphere tracer uses
to size safe steps.

Evaluation is written with explicit per-component arithmetic (no matmul or
axis reductions) so that a scalar re-implementation of the same formulas
produces bit-identical results; renderer equivalence tests rely on this.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import Invalid

# Snap tolerance for grid coordinates: queries within this of an exact node
# land on the node, so node lookups return stored values exactly.
_GRID_SNAP = 1e-9


class SdfField:
    """Base interface: `eval` batched signed distance, `gradient` batched raw gradient."""

    lipschitz: float = 1.0

    def eval(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounding_sphere(self):
        """(center, radius) with d(p) >= |p - center| - radius everywhere,
        or None when no finite bound exists (e.g. planes)."""
        return None


@dataclass
class Plane(SdfField):
    """Half-space below the plane n.p = offset; n normalized at construction."""

    normal: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64).reshape(3)
        ln = float(np.sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]))
        if ln < 1e-12:
            raise Invalid("plane normal is zero")
        self.normal = n / ln
        self.offset = float(self.offset)
        self.lipschitz = 1.0

    def eval(self, pts):
        n = self.normal
        return pts[:, 0] * n[0] + pts[:, 1] * n[1] + pts[:, 2] * n[2] - self.offset

    def gradient(self, pts):
        return np.broadcast_to(self.normal, (pts.shape[0], 3)).copy()


@dataclass
class Sphere(SdfField):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64).reshape(3)
        self.radius = float(self.radius)
        if self.radius <= 0:
            raise Invalid("sphere radius must be positive")
        self.lipschitz = 1.0

    def eval(self, pts):
        c = self.center
        dx = pts[:, 0] - c[0]
        dy = pts[:, 1] - c[1]
        dz = pts[:, 2] - c[2]
        return np.sqrt(dx * dx + dy * dy + dz * dz) - self.radius

    def gradient(self, pts):
        g = pts - self.center
        return g

    def bounding_sphere(self):
        return self.center, self.radius


@dataclass
class Box(SdfField):
    """Axis-aligned box given by center and half extents."""

    center: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64).reshape(3)
        self.half_extents = np.asarray(self.half_extents, dtype=np.float64).reshape(3)
        if np.any(self.half_extents <= 0):
            raise Invalid("box half extents must be positive")
        self.lipschitz = 1.0

    def _q(self, pts):
        c, h = self.center, self.half_extents
        qx = np.abs(pts[:, 0] - c[0]) - h[0]
        qy = np.abs(pts[:, 1] - c[1]) - h[1]
        qz = np.abs(pts[:, 2] - c[2]) - h[2]
        return qx, qy, qz

    def eval(self, pts):
        qx, qy, qz = self._q(pts)
        ox = np.maximum(qx, 0.0)
        oy = np.maximum(qy, 0.0)
        oz = np.maximum(qz, 0.0)
        outside = np.sqrt(ox * ox + oy * oy + oz * oz)
        inside = np.minimum(np.maximum(qx, np.maximum(qy, qz)), 0.0)
        return outside + inside

    def gradient(self, pts):
        qx, qy, qz = self._q(pts)
        c = self.center
        sx = np.where(pts[:, 0] >= c[0], 1.0, -1.0)
        sy = np.where(pts[:, 1] >= c[1], 1.0, -1.0)
        sz = np.where(pts[:, 2] >= c[2], 1.0, -1.0)
        out = (qx > 0) | (qy > 0) | (qz > 0)
        g = np.empty((pts.shape[0], 3))
        # outside: gradient points away from the clamped box surface
        g[:, 0] = np.where(out, sx * np.maximum(qx, 0.0), 0.0)
        g[:, 1] = np.where(out, sy * np.maximum(qy, 0.0), 0.0)
        g[:, 2] = np.where(out, sz * np.maximum(qz, 0.0), 0.0)
        # inside: along the axis of least penetration
        mx = np.maximum(qx, np.maximum(qy, qz))
        ix = ~out & (qx == mx)
        iy = ~out & ~ix & (qy == mx)
        iz = ~out & ~ix & ~iy
        g[ix, 0] = sx[ix]
        g[iy, 1] = sy[iy]
        g[iz, 2] = sz[iz]
        return g

    def bounding_sphere(self):
        h = self.half_extents
        return self.center, float(np.sqrt(h[0] ** 2 + h[1] ** 2 + h[2] ** 2))


@dataclass
class RoundedBox(SdfField):
    """Box with filleted edges; half_extents are the outer extents, radius the fillet."""

    center: np.ndarray
    half_extents: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64).reshape(3)
        self.half_extents = np.asarray(self.half_extents, dtype=np.float64).reshape(3)
        self.radius = float(self.radius)
        if self.radius < 0 or self.radius >= float(np.min(self.half_extents)):
            raise Invalid("fillet radius must be in [0, min half extent)")
        self._inner = Box(self.center, self.half_extents - self.radius)
        self.lipschitz = 1.0

    def eval(self, pts):
        return self._inner.eval(pts) - self.radius

    def gradient(self, pts):
        return self._inner.gradient(pts)

    def bounding_sphere(self):
        h = self.half_extents
        return self.center, float(np.sqrt(h[0] ** 2 + h[1] ** 2 + h[2] ** 2))


@dataclass
class Capsule(SdfField):
    """Segment a-b swept by a sphere of the given radius."""

    a: np.ndarray
    b: np.ndarray
    radius: float

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64).reshape(3)
        self.b = np.asarray(self.b, dtype=np.float64).reshape(3)
        self.radius = float(self.radius)
        if self.radius <= 0:
            raise Invalid("capsule radius must be positive")
        d = self.b - self.a
        self._len2 = float(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
        if self._len2 < 1e-18:
            raise Invalid("capsule endpoints coincide")
        self.lipschitz = 1.0

    def _closest_delta(self, pts):
        a, b = self.a, self.b
        bax = b[0] - a[0]
        bay = b[1] - a[1]
        baz = b[2] - a[2]
        pax = pts[:, 0] - a[0]
        pay = pts[:, 1] - a[1]
        paz = pts[:, 2] - a[2]
        h = (pax * bax + pay * bay + paz * baz) / self._len2
        h = np.minimum(np.maximum(h, 0.0), 1.0)
        return pax - bax * h, pay - bay * h, paz - baz * h

    def eval(self, pts):
        dx, dy, dz = self._closest_delta(pts)
        return np.sqrt(dx * dx + dy * dy + dz * dz) - self.radius

    def gradient(self, pts):
        dx, dy, dz = self._closest_delta(pts)
        g = np.empty((pts.shape[0], 3))
        g[:, 0] = dx
        g[:, 1] = dy
        g[:, 2] = dz
        return g

    def bounding_sphere(self):
        mid = (self.a + self.b) / 2.0
        half = float(np.sqrt(self._len2)) / 2.0
        return mid, half + self.radius


class Union(SdfField):
    """Pointwise minimum of child fields; ties resolve to the earliest child."""

    def __init__(self, children):
        children = list(children)
        if not children:
            raise Invalid("union needs at least one child")
        self.children = children
        self.lipschitz = max(c.lipschitz for c in children)
        self._child_spheres = [c.bounding_sphere() for c in children]

    def eval(self, pts):
        d = self.children[0].eval(pts)
        for c, bs in zip(self.children[1:], self._child_spheres[1:]):
            if bs is None:
                d = np.minimum(d, c.eval(pts))
                continue
            # d_child >= |p - center| - r everywhere, so points where that
            # bound cannot beat the running minimum are skipped exactly
            center, r = bs
            rx = pts[:, 0] - center[0]
            ry = pts[:, 1] - center[1]
            rz = pts[:, 2] - center[2]
            low = np.sqrt(rx * rx + ry * ry + rz * rz) - r
            m = low < d
            if not m.any():
                continue
            if m.all():
                d = np.minimum(d, c.eval(pts))
            else:
                d[m] = np.minimum(d[m], c.eval(pts[m]))
        return d

    def gradient(self, pts):
        d = self.children[0].eval(pts)
        which = np.zeros(pts.shape[0], dtype=np.int64)
        for i, c in enumerate(self.children[1:], start=1):
            di = c.eval(pts)
            closer = di < d
            d = np.minimum(d, di)
            which[closer] = i
        g = np.empty((pts.shape[0], 3))
        for i, c in enumerate(self.children):
            m = which == i
            if np.any(m):
                g[m] = c.gradient(pts[m])
        return g

    def bounding_sphere(self):
        spheres = [c.bounding_sphere() for c in self.children]
        if any(s is None for s in spheres):
            return None
        return enclosing_sphere(spheres)


def enclosing_sphere(spheres):
    """A sphere containing all given (center, radius) spheres; not minimal."""
    centers = np.stack([np.asarray(c, dtype=np.float64) for c, _ in spheres])
    mid = centers.mean(axis=0)
    r = max(float(np.linalg.norm(c - mid)) + float(rad) for c, rad in spheres)
    return mid, r


class GridField(SdfField):
    """Distances sampled on a regular node-centered grid, trilinearly interpolated.

    `values` is (nx, ny, nz) in meters; the grid spans
    [origin, origin + (dims - 1) * cell] per axis. Outside that box the field
    returns the exterior distance to the box plus the value at the clamped
    (box-surface) point, so tracing through unsampled space stays bounded.
    The Lipschitz bound is computed from the data at load: the largest
    adjacent-node difference over the cell size, floored at 1.
    """

    def __init__(self, origin, cell: float, values: np.ndarray):
        self.origin = np.asarray(origin, dtype=np.float64).reshape(3)
        self.cell = float(cell)
        if self.cell <= 0:
            raise Invalid("grid cell size must be positive")
        v = np.asarray(values, dtype=np.float64)
        if v.ndim != 3 or min(v.shape) < 2:
            raise Invalid("grid values must be 3-d with at least 2 nodes per axis")
        self.values = v
        self.dims = np.array(v.shape, dtype=np.int64)
        slope = 0.0
        for ax in range(3):
            dv = np.abs(np.diff(v, axis=ax))
            if dv.size:
                slope = max(slope, float(dv.max()) / self.cell)
        self.lipschitz = max(1.0, slope)

    @staticmethod
    def from_samples(field: SdfField, origin, cell: float, dims) -> "GridField":
        """Sample another field onto a grid (test/authoring helper)."""
        dims = np.asarray(dims, dtype=np.int64)
        origin = np.asarray(origin, dtype=np.float64)
        xs = origin[0] + cell * np.arange(dims[0])
        ys = origin[1] + cell * np.arange(dims[1])
        zs = origin[2] + cell * np.arange(dims[2])
        gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
        pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
        vals = field.eval(pts).reshape(tuple(dims))
        return GridField(origin, cell, vals)

    def _grid_coords(self, pts):
        u = np.empty_like(pts)
        for ax in range(3):
            ua = (pts[:, ax] - self.origin[ax]) / self.cell
            r = np.round(ua)
            snap = np.abs(ua - r) <= _GRID_SNAP
            u[:, ax] = np.where(snap, r, ua)
        return u

    def _interp(self, u):
        """Trilinear interpolation at grid coordinates u, assumed inside the domain."""
        nx, ny, nz = (int(d) for d in self.dims)
        i = np.minimum(np.floor(u).astype(np.int64), self.dims - 2)
        i = np.maximum(i, 0)
        f = u - i
        fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
        ix, iy, iz = i[:, 0], i[:, 1], i[:, 2]
        flat = self.values.ravel()

        def node(ax, ay, az):
            return flat[(ax * ny + ay) * nz + az]

        v000 = node(ix, iy, iz)
        v100 = node(ix + 1, iy, iz)
        v010 = node(ix, iy + 1, iz)
        v110 = node(ix + 1, iy + 1, iz)
        v001 = node(ix, iy, iz + 1)
        v101 = node(ix + 1, iy, iz + 1)
        v011 = node(ix, iy + 1, iz + 1)
        v111 = node(ix + 1, iy + 1, iz + 1)
        c00 = v000 * (1.0 - fx) + v100 * fx
        c10 = v010 * (1.0 - fx) + v110 * fx
        c01 = v001 * (1.0 - fx) + v101 * fx
        c11 = v011 * (1.0 - fx) + v111 * fx
        c0 = c00 * (1.0 - fy) + c10 * fy
        c1 = c01 * (1.0 - fy) + c11 * fy
        return c0 * (1.0 - fz) + c1 * fz

    def eval(self, pts):
        u = self._grid_coords(pts)
        hi = (self.dims - 1).astype(np.float64)
        uc = np.minimum(np.maximum(u, 0.0), hi)
        dx = (u[:, 0] - uc[:, 0]) * self.cell
        dy = (u[:, 1] - uc[:, 1]) * self.cell
        dz = (u[:, 2] - uc[:, 2]) * self.cell
        box_dist = np.sqrt(dx * dx + dy * dy + dz * dz)
        return self._interp(uc) + box_dist

    def gradient(self, pts):
        h = max(1e-4, self.cell / 4.0)
        g = np.empty((pts.shape[0], 3))
        for ax in range(3):
            off = np.zeros(3)
            off[ax] = h
            g[:, ax] = (self.eval(pts + off) - self.eval(pts - off)) / (2.0 * h)
        return g

    def bounding_sphere(self):
        half = (self.dims - 1).astype(np.float64) * self.cell / 2.0
        center = self.origin + half
        r = float(np.sqrt(half[0] ** 2 + half[1] ** 2 + half[2] ** 2))
        # stored values can dip below zero at the domain boundary; pad so the
        # sphere bound d >= |p - c| - r keeps holding outside the domain
        return center, r + max(0.0, -float(self.values.min()))


def eval_sdf(field: SdfField, p) -> float:
    """Signed distance of a single point; total over all of space."""
    p = np.asarray(p, dtype=np.float64).reshape(1, 3)
    return float(field.eval(p)[0])


def sdf_gradient(field: SdfField, p) -> np.ndarray:
    """Unit gradient of a single point, (0, 0, 1) where the raw gradient vanishes."""
    p = np.asarray(p, dtype=np.float64).reshape(1, 3)
    return normalized_gradient(field, p)[0]


def normalized_gradient(field: SdfField, pts: np.ndarray) -> np.ndarray:
    g = field.gradient(pts)
    n = np.sqrt(g[:, 0] * g[:, 0] + g[:, 1] * g[:, 1] + g[:, 2] * g[:, 2])
    bad = n < 1e-12
    n = np.where(bad, 1.0, n)
    g = g / n[:, None]
    g[bad] = (0.0, 0.0, 1.0)
    return g


# ---------------------------------------------------------------------------
# JSON (de)serialization of field descriptions
# ---------------------------------------------------------------------------

def field_from_dict(doc: dict, base_dir: Path | None = None) -> SdfField:
    """Build a field from its JSON description. Grid values live in a sidecar
    binary of little-endian float32, x-fastest order."""
    kind = doc.get("kind")
    if kind == "plane":
        return Plane(doc["normal"], doc.get("offset", 0.0))
    if kind == "sphere":
        return Sphere(doc["center"], doc["radius"])
    if kind == "box":
        return Box(doc["center"], doc["half_extents"])
    if kind == "rounded_box":
        return RoundedBox(doc["center"], doc["half_extents"], doc["radius"])
    if kind == "capsule":
        return Capsule(doc["a"], doc["b"], doc["radius"])
    if kind == "union":
        return Union(field_from_dict(c, base_dir) for c in doc["children"])
    if kind == "grid":
        dims = [int(d) for d in doc["dims"]]
        path = Path(doc["file"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        raw = np.fromfile(path, dtype="<f4")
        n = dims[0] * dims[1] * dims[2]
        if raw.size != n:
            raise Invalid(f"grid sidecar {path} has {raw.size} values, expected {n}")
        # file is x-fastest: index = ix + nx*(iy + ny*iz)
        values = raw.astype(np.float64).reshape(dims[2], dims[1], dims[0]).transpose(2, 1, 0)
        return GridField(doc["origin"], doc["cell"], values)
    raise Invalid(f"unknown sdf kind {kind!r}")


def grid_to_sidecar(grid: GridField, path: Path) -> dict:
    """Write grid values as the sidecar binary; returns the JSON stanza."""
    flat = grid.values.transpose(2, 1, 0).reshape(-1).astype("<f4")
    flat.tofile(path)
    return {
        "kind": "grid",
        "file": path.name,
        "origin": [float(v) for v in grid.origin],
        "cell": grid.cell,
        "dims": [int(d) for d in grid.dims],
    }
