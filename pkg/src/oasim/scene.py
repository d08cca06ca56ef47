"""Scene composition: a background field plus posed foreground assets,
answering point and ray queries against the union.

The tracer is written twice in this codebase: vectorized here, and as a
deliberately naive scalar path in the test suite. Both must agree bit for
bit, which constrains this module to explicit per-component arithmetic
(no matmul, no reductions) anywhere on the ray path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import Invalid, UnknownAsset
from .geometry import Pose, quat_to_matrix
from .sdf import (GridField, Plane, SdfField, Union, enclosing_sphere,
                  field_from_dict, grid_to_sidecar, normalized_gradient)

# Semantic classes. 0 is reserved for the background, 65535 for "no hit"
# in instance/semantic image channels.
CLASS_IDS = {"background": 0, "vehicle.car": 1, "vehicle.truck": 2, "vehicle.bus": 3}
CLASS_NAMES = {v: k for k, v in CLASS_IDS.items()}
NO_HIT_ID = 65535


@dataclass
class Asset:
    """Insertable foreground object. Object frame: origin at bounding-box
    bottom-center, +x forward; bbox = (length, width, height) extents."""

    asset_id: str
    class_name: str
    shape: SdfField
    bbox: np.ndarray
    albedo: np.ndarray

    def __post_init__(self):
        if self.class_name not in CLASS_IDS or self.class_name == "background":
            raise Invalid(f"unknown asset class {self.class_name!r}")
        self.bbox = np.asarray(self.bbox, dtype=np.float64).reshape(3)
        self.albedo = np.asarray(self.albedo, dtype=np.float64).reshape(3)
        if self.bbox[0] < self.bbox[1]:
            raise Invalid(f"asset {self.asset_id}: bbox length < width")
        if np.any(self.bbox <= 0):
            raise Invalid(f"asset {self.asset_id}: bbox extents must be positive")
        if np.any(self.albedo < 0) or np.any(self.albedo > 1):
            raise Invalid(f"asset {self.asset_id}: albedo out of [0,1]")

    @property
    def class_id(self) -> int:
        return CLASS_IDS[self.class_name]


class AssetLibrary:
    def __init__(self, assets=()):
        self._assets: dict[str, Asset] = {}
        for a in assets:
            self.add(a)

    def add(self, asset: Asset):
        if asset.asset_id in self._assets:
            raise Invalid(f"duplicate asset id {asset.asset_id!r}")
        self._assets[asset.asset_id] = asset

    def get(self, asset_id: str) -> Asset:
        try:
            return self._assets[asset_id]
        except KeyError:
            raise UnknownAsset(f"asset {asset_id!r} not in library") from None

    def ids(self):
        return sorted(self._assets)

    def __contains__(self, asset_id):
        return asset_id in self._assets

    def __len__(self):
        return len(self._assets)


class BackgroundAlbedo:
    """Constant color, or height bands: first band whose z_max exceeds the
    query z wins, points above all bands take the last color."""

    def __init__(self, constant=None, bands=None):
        if (constant is None) == (bands is None):
            raise Invalid("background albedo needs exactly one of constant/bands")
        self.constant = None if constant is None else np.asarray(constant, dtype=np.float64)
        if bands is not None:
            bands = [(float(z), np.asarray(c, dtype=np.float64)) for z, c in bands]
            if not bands or sorted(z for z, _ in bands) != [z for z, _ in bands]:
                raise Invalid("albedo bands must be non-empty and sorted by z")
        self.bands = bands

    def at(self, pts: np.ndarray) -> np.ndarray:
        n = pts.shape[0]
        if self.constant is not None:
            return np.broadcast_to(self.constant, (n, 3)).copy()
        out = np.broadcast_to(self.bands[-1][1], (n, 3)).copy()
        # walk bands top-down so the lowest matching band wins
        for z_max, color in reversed(self.bands[:-1]):
            out[pts[:, 2] <= z_max] = color
        return out

    def to_dict(self):
        if self.constant is not None:
            return {"constant": [float(c) for c in self.constant]}
        return {"bands": [[z, [float(c) for c in col]] for z, col in self.bands]}

    @staticmethod
    def from_dict(doc):
        if "constant" in doc:
            return BackgroundAlbedo(constant=doc["constant"])
        return BackgroundAlbedo(bands=[(z, c) for z, c in doc["bands"]])


@dataclass
class Hit:
    t: float
    point: np.ndarray
    normal: np.ndarray
    instance_id: int
    class_name: str


@dataclass
class _Component:
    """One distance-query participant: instance id 0 is the background
    (identity transform); others carry world->object rotation rows."""

    instance_id: int
    class_id: int
    field: SdfField
    albedo_source: object
    # world->object: local = M (p - t); rows stored explicitly
    m: np.ndarray | None  # (3,3) or None for identity
    t: np.ndarray | None

    def local_points(self, pts: np.ndarray) -> np.ndarray:
        if self.m is None:
            return pts
        dx = pts[:, 0] - self.t[0]
        dy = pts[:, 1] - self.t[1]
        dz = pts[:, 2] - self.t[2]
        m = self.m
        out = np.empty_like(pts)
        out[:, 0] = m[0, 0] * dx + m[0, 1] * dy + m[0, 2] * dz
        out[:, 1] = m[1, 0] * dx + m[1, 1] * dy + m[1, 2] * dz
        out[:, 2] = m[2, 0] * dx + m[2, 1] * dy + m[2, 2] * dz
        return out

    def eval(self, pts: np.ndarray) -> np.ndarray:
        return self.field.eval(self.local_points(pts))


class SceneSnapshot:
    """Immutable composed scene; all queries are pure."""

    def __init__(self, background: SdfField, background_albedo: BackgroundAlbedo,
                 instances, library: AssetLibrary):
        placed = sorted(instances, key=lambda e: e[0])
        ids = [e[0] for e in placed]
        if ids != list(range(1, len(ids) + 1)):
            raise Invalid("instance ids must be unique and dense from 1")
        self.background = background
        self.background_albedo = background_albedo
        self.library = library
        self.instances = [(iid, aid, pose) for iid, aid, pose in placed]
        comps = [_Component(0, 0, background, background_albedo, None, None)]
        for iid, aid, pose in self.instances:
            asset = library.get(aid)
            rot = quat_to_matrix(pose.rotation)
            # world->object rotation is the transpose of object->world
            m_inv = np.ascontiguousarray(rot.T)
            comps.append(_Component(iid, asset.class_id, asset.shape, asset,
                                    m_inv, np.asarray(pose.translation, dtype=np.float64)))
        self.components = comps
        self.lipschitz = max(c.field.lipschitz for c in comps)
        self.semantic_table = {c.instance_id: CLASS_NAMES[c.class_id] for c in comps}
        self._build_escape_geometry()

    def _build_escape_geometry(self):
        """Planes plus one sphere enclosing every bounded part. A ray outside
        all of them and moving away can provably never come within eps, which
        lets the tracer retire it early without changing any reported hit."""
        planes = []
        spheres = []
        bounded = True

        def walk(f):
            nonlocal bounded
            if isinstance(f, Union):
                for c in f.children:
                    walk(c)
                return
            if isinstance(f, Plane):
                planes.append((f.normal, f.offset))
                return
            bs = f.bounding_sphere()
            if bs is None:
                bounded = False
            else:
                spheres.append(bs)

        walk(self.background)
        self._instance_spheres = []
        for iid, aid, pose in self.instances:
            bbox = self.library.get(aid).bbox
            center = pose.transform_point(np.array([0.0, 0.0, bbox[2] / 2.0]))
            r = float(np.sqrt(bbox[0] ** 2 + bbox[1] ** 2 + bbox[2] ** 2)) / 2.0
            spheres.append((center, r + 0.01))
            self._instance_spheres.append((center, r + 0.01))
        if not bounded:
            self._escape = None
            return
        if spheres:
            center, radius = enclosing_sphere(spheres)
        else:
            center, radius = None, 0.0
        self._escape = (
            np.array([n for n, _ in planes]).reshape(-1, 3),
            np.array([off for _, off in planes]),
            center, radius,
        )

    def _escaped(self, p: np.ndarray, d: np.ndarray, eps: float,
                 rem: np.ndarray) -> np.ndarray:
        """True for rays at p along d whose remaining segment of length rem
        provably stays more than eps away from the scene. Both checks bound
        the exact segment minimum: plane distance is linear in t, and the
        distance to the enclosing sphere is minimized at the clamped
        closest-approach parameter."""
        normals, offsets, center, radius = self._escape
        esc = np.ones(p.shape[0], dtype=bool)
        for i in range(normals.shape[0]):
            n = normals[i]
            val = p[:, 0] * n[0] + p[:, 1] * n[1] + p[:, 2] * n[2] - offsets[i]
            rate = d[:, 0] * n[0] + d[:, 1] * n[1] + d[:, 2] * n[2]
            esc &= (val > eps) & (val + rate * rem > eps)
            if not esc.any():
                return esc
        if center is not None:
            rx = p[:, 0] - center[0]
            ry = p[:, 1] - center[1]
            rz = p[:, 2] - center[2]
            tc = -(rx * d[:, 0] + ry * d[:, 1] + rz * d[:, 2])
            tc = np.clip(tc, 0.0, rem)
            cx = rx + tc * d[:, 0]
            cy = ry + tc * d[:, 1]
            cz = rz + tc * d[:, 2]
            esc &= np.sqrt(cx * cx + cy * cy + cz * cz) - radius > eps
        return esc

    # ------------------------------------------------------------------
    # point queries
    # ------------------------------------------------------------------

    def eval(self, pts: np.ndarray) -> np.ndarray:
        d = self.components[0].eval(pts)
        for c, (center, r) in zip(self.components[1:], self._instance_spheres):
            # the instance distance is >= |p - center| - r, so points where
            # that bound cannot beat the running minimum are skipped exactly
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

    def eval_with_owner(self, pts: np.ndarray):
        """Distance plus owning instance id; ties go to the lowest id."""
        d = self.components[0].eval(pts)
        owner = np.zeros(pts.shape[0], dtype=np.int64)
        for c, (center, r) in zip(self.components[1:], self._instance_spheres):
            rx = pts[:, 0] - center[0]
            ry = pts[:, 1] - center[1]
            rz = pts[:, 2] - center[2]
            low = np.sqrt(rx * rx + ry * ry + rz * rz) - r
            m = low < d
            if not m.any():
                continue
            sub = pts if m.all() else pts[m]
            dc = c.eval(sub)
            dm = d if m.all() else d[m]
            closer = dc < dm
            if m.all():
                d = np.where(closer, dc, d)
                owner = np.where(closer, c.instance_id, owner)
            else:
                idx = np.nonzero(m)[0][closer]
                d[idx] = dc[closer]
                owner[idx] = c.instance_id
        return d, owner

    def normal_at(self, pts: np.ndarray, owner: np.ndarray) -> np.ndarray:
        """World-frame unit normals from the owning component's gradient."""
        out = np.empty((pts.shape[0], 3))
        for c in self.components:
            mask = owner == c.instance_id
            if not np.any(mask):
                continue
            local = c.local_points(pts[mask])
            g = normalized_gradient(c.field, local)
            if c.m is None:
                out[mask] = g
            else:
                m = c.m  # world->object; object->world is its transpose
                w = np.empty_like(g)
                w[:, 0] = m[0, 0] * g[:, 0] + m[1, 0] * g[:, 1] + m[2, 0] * g[:, 2]
                w[:, 1] = m[0, 1] * g[:, 0] + m[1, 1] * g[:, 1] + m[2, 1] * g[:, 2]
                w[:, 2] = m[0, 2] * g[:, 0] + m[1, 2] * g[:, 1] + m[2, 2] * g[:, 2]
                out[mask] = w
        return out

    def albedo_at(self, pts: np.ndarray, owner: np.ndarray) -> np.ndarray:
        out = np.empty((pts.shape[0], 3))
        for c in self.components:
            mask = owner == c.instance_id
            if not np.any(mask):
                continue
            if c.instance_id == 0:
                out[mask] = self.background_albedo.at(pts[mask])
            else:
                out[mask] = c.albedo_source.albedo
        return out

    def class_of(self, owner: np.ndarray) -> np.ndarray:
        table = {c.instance_id: c.class_id for c in self.components}
        out = np.zeros(owner.shape, dtype=np.int64)
        for iid, cid in table.items():
            out[owner == iid] = cid
        return out

    # ------------------------------------------------------------------
    # ray queries
    # ------------------------------------------------------------------

    def trace_rays(self, origins: np.ndarray, dirs: np.ndarray,
                   t_max: float, eps: float):
        """Sphere-trace a batch of rays.

        Steps advance by max(d / Lipschitz, eps / 4) from t = 0. A ray is
        a hit once a sample sees d < eps; marching then continues until
        the distance changes sign, and the crossing is refined with 8
        bisection iterations between the last two samples. Rays whose
        distance never leaves (0, eps) fall back to the triggering sample
        (still within tolerance). Misses: t exceeds t_max, or 512 marching
        evaluations, before any sample saw d < eps.

        Returns (t, hit): refined parameters (+inf where unset) and a mask.
        """
        n = origins.shape[0]
        L = self.lipschitz
        t = np.zeros(n)
        t_prev = np.zeros(n)
        t_trig = np.zeros(n)
        triggered = np.zeros(n, dtype=bool)
        needs_bisect = np.zeros(n, dtype=bool)
        t_out = np.full(n, np.inf)
        hit = np.zeros(n, dtype=bool)
        active = np.arange(n)
        ox, oy, oz = origins[:, 0].copy(), origins[:, 1].copy(), origins[:, 2].copy()
        dx, dy, dz = dirs[:, 0].copy(), dirs[:, 1].copy(), dirs[:, 2].copy()
        for step in range(512):
            if active.size == 0:
                break
            ta = t[active]
            p = np.empty((active.size, 3))
            p[:, 0] = ox[active] + ta * dx[active]
            p[:, 1] = oy[active] + ta * dy[active]
            p[:, 2] = oz[active] + ta * dz[active]
            d = self.eval(p)
            new_trig = d < eps
            if np.any(new_trig):
                idx = active[new_trig]
                fresh = ~triggered[idx]
                t_trig[idx[fresh]] = t[idx[fresh]]
                triggered[idx] = True
            crossed = d < 0.0
            if np.any(crossed):
                idx = active[crossed]
                hit[idx] = True
                if step == 0:
                    t_out[idx] = t[idx]
                else:
                    # refine later in one batch; t_prev/t stay frozen for
                    # retired rays so the bracket survives
                    needs_bisect[idx] = True
            adv = ~crossed
            if np.any(adv):
                idx = active[adv]
                step_len = np.maximum(d[adv] / L, eps / 4.0)
                t_next = t[idx] + step_len
                t_prev[idx] = t[idx]
                t[idx] = t_next
                overran = t_next > t_max
                if np.any(overran):
                    out = idx[overran]
                    skim = triggered[out]
                    t_out[out[skim]] = t_trig[out[skim]]
                    hit[out[skim]] = True
                active = idx[~overran]
            else:
                active = active[:0]
            # periodically retire rays whose outcome is already decided
            if self._escape is not None and step % 16 == 15 and active.size:
                ta = t[active]
                p = np.empty((active.size, 3))
                p[:, 0] = ox[active] + ta * dx[active]
                p[:, 1] = oy[active] + ta * dy[active]
                p[:, 2] = oz[active] + ta * dz[active]
                dd = np.stack([dx[active], dy[active], dz[active]], axis=1)
                esc = self._escaped(p, dd, eps, t_max - ta)
                if esc.any():
                    gone = active[esc]
                    skim = triggered[gone]
                    t_out[gone[skim]] = t_trig[gone[skim]]
                    hit[gone[skim]] = True
                    active = active[~esc]
        if active.size:
            skim = triggered[active]
            rest = active[skim]
            t_out[rest] = t_trig[rest]
            hit[rest] = True
        nb = np.nonzero(needs_bisect)[0]
        if nb.size:
            t_out[nb] = self._bisect(nb, t_prev[nb], t[nb],
                                     ox, oy, oz, dx, dy, dz)
        return t_out, hit

    def _bisect(self, idx, lo, hi, ox, oy, oz, dx, dy, dz):
        lo = lo.copy()
        hi = hi.copy()
        for _ in range(8):
            tm = 0.5 * (lo + hi)
            p = np.empty((idx.size, 3))
            p[:, 0] = ox[idx] + tm * dx[idx]
            p[:, 1] = oy[idx] + tm * dy[idx]
            p[:, 2] = oz[idx] + tm * dz[idx]
            dm = self.eval(p)
            neg = dm < 0.0
            hi = np.where(neg, tm, hi)
            lo = np.where(neg, lo, tm)
        return 0.5 * (lo + hi)


def compose(background: SdfField, background_albedo: BackgroundAlbedo,
            instances, library: AssetLibrary) -> SceneSnapshot:
    """Build an immutable snapshot; raises UnknownAsset for unresolvable ids."""
    for _, aid, _ in instances:
        library.get(aid)
    return SceneSnapshot(background, background_albedo, instances, library)


def sphere_trace(snapshot: SceneSnapshot, origin, direction,
                 t_max: float = 1000.0, eps: float = 1e-3) -> Hit | None:
    """Single-ray convenience wrapper over trace_rays."""
    o = np.asarray(origin, dtype=np.float64).reshape(1, 3)
    d = np.asarray(direction, dtype=np.float64).reshape(1, 3)
    t, hit = snapshot.trace_rays(o, d, t_max, eps)
    if not hit[0]:
        return None
    th = float(t[0])
    p = np.empty((1, 3))
    p[0, 0] = o[0, 0] + th * d[0, 0]
    p[0, 1] = o[0, 1] + th * d[0, 1]
    p[0, 2] = o[0, 2] + th * d[0, 2]
    _, owner = snapshot.eval_with_owner(p)
    normal = snapshot.normal_at(p, owner)[0]
    iid = int(owner[0])
    return Hit(t=th, point=p[0], normal=normal, instance_id=iid,
               class_name=snapshot.semantic_table.get(iid, "background"))


# ---------------------------------------------------------------------------
# scene.json
# ---------------------------------------------------------------------------

def load_scene(path: Path) -> SceneSnapshot:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise Invalid(f"cannot read scene file {path}: {exc}") from None
    base = path.parent
    bg_parts = [field_from_dict(p, base) for p in doc["background"]]
    background = bg_parts[0] if len(bg_parts) == 1 else Union(bg_parts)
    albedo = BackgroundAlbedo.from_dict(doc["background_albedo"])
    lib = AssetLibrary()
    for a in doc.get("assets", []):
        lib.add(Asset(a["id"], a["class"], field_from_dict(a["shape"], base),
                      a["bbox"], a["albedo"]))
    instances = [(e["instance_id"], e["asset"], Pose.from_dict(e["pose"]))
                 for e in doc.get("instances", [])]
    return compose(background, albedo, instances, lib)


def save_scene(snapshot: SceneSnapshot, path: Path):
    path = Path(path)
    bg = snapshot.background
    parts = bg.children if isinstance(bg, Union) else [bg]
    doc = {
        "background": [_field_to_dict(p, path.parent, f"bg{i}") for i, p in enumerate(parts)],
        "background_albedo": snapshot.background_albedo.to_dict(),
        "assets": [
            {
                "id": a.asset_id,
                "class": a.class_name,
                "shape": _field_to_dict(a.shape, path.parent, a.asset_id),
                "bbox": [float(v) for v in a.bbox],
                "albedo": [float(v) for v in a.albedo],
            }
            for a in (snapshot.library.get(i) for i in snapshot.library.ids())
        ],
        "instances": [
            {"instance_id": iid, "asset": aid, "pose": pose.to_dict()}
            for iid, aid, pose in snapshot.instances
        ],
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _field_to_dict(f: SdfField, base_dir: Path, tag: str) -> dict:
    from .sdf import Plane, Sphere, Box, RoundedBox, Capsule

    if isinstance(f, Plane):
        return {"kind": "plane", "normal": [float(v) for v in f.normal], "offset": f.offset}
    if isinstance(f, Sphere):
        return {"kind": "sphere", "center": [float(v) for v in f.center], "radius": f.radius}
    if isinstance(f, RoundedBox):
        return {"kind": "rounded_box", "center": [float(v) for v in f.center],
                "half_extents": [float(v) for v in f.half_extents], "radius": f.radius}
    if isinstance(f, Box):
        return {"kind": "box", "center": [float(v) for v in f.center],
                "half_extents": [float(v) for v in f.half_extents]}
    if isinstance(f, Capsule):
        return {"kind": "capsule", "a": [float(v) for v in f.a],
                "b": [float(v) for v in f.b], "radius": f.radius}
    if isinstance(f, Union):
        return {"kind": "union",
                "children": [_field_to_dict(c, base_dir, f"{tag}c{i}")
                             for i, c in enumerate(f.children)]}
    if isinstance(f, GridField):
        return grid_to_sidecar(f, base_dir / f"{tag}.f32")
    raise Invalid(f"cannot serialize field {type(f).__name__}")
