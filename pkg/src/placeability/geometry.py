"""Rigid transforms, point clouds, triangle meshes and planar polygons.

All lengths are meters and all angles radians.  Every container type is
immutable after construction: the backing arrays are marked read-only so
instances can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateHull, EmptyGeometry, GeometryError

ORTHO_TOL = 1e-9
COLLINEAR_EPS = 1e-12
INSIDE_TOL = 1e-9


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# Rigid transforms
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RigidPose:
    """An element of SE(3): ``x -> rotation @ x + translation``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float).reshape(-1)
        if R.shape != (3, 3) or t.shape != (3,):
            raise GeometryError("rotation must be 3x3 and translation a 3-vector")
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise GeometryError("pose contains non-finite values")
        if np.abs(R.T @ R - np.eye(3)).max() > ORTHO_TOL or abs(np.linalg.det(R) - 1.0) > ORTHO_TOL:
            raise GeometryError("rotation is not a proper orthonormal matrix")
        object.__setattr__(self, "rotation", _frozen(R))
        object.__setattr__(self, "translation", _frozen(t))

    @classmethod
    def identity(cls) -> "RigidPose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, T) -> "RigidPose":
        T = np.asarray(T, dtype=float)
        return cls(T[:3, :3], T[:3, 3])

    @classmethod
    def from_translation(cls, t) -> "RigidPose":
        return cls(np.eye(3), t)

    @classmethod
    def from_rotation(cls, R) -> "RigidPose":
        return cls(R, np.zeros(3))

    @property
    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def compose(self, other: "RigidPose") -> "RigidPose":
        """Return ``self ∘ other`` (apply ``other`` first)."""
        return RigidPose(
            _reorthonormalize(self.rotation @ other.rotation),
            self.rotation @ other.translation + self.translation,
        )

    __matmul__ = compose

    def inverse(self) -> "RigidPose":
        Rt = self.rotation.T
        return RigidPose(Rt, -Rt @ self.translation)

    def apply(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def rotate(self, vectors) -> np.ndarray:
        return np.asarray(vectors, dtype=float) @ self.rotation.T

    def allclose(self, other: "RigidPose", atol=1e-9) -> bool:
        return bool(
            np.allclose(self.rotation, other.rotation, atol=atol, rtol=0)
            and np.allclose(self.translation, other.translation, atol=atol, rtol=0)
        )

    def __repr__(self):
        return f"RigidPose(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


def _reorthonormalize(R):
    # Composition drifts by ~1e-16 per step; snap back with an SVD only when needed.
    if np.abs(R.T @ R - np.eye(3)).max() < 1e-12:
        return R
    U, _, Vt = np.linalg.svd(R)
    Rn = U @ Vt
    if np.linalg.det(Rn) < 0:
        U[:, -1] *= -1
        Rn = U @ Vt
    return Rn


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def axis_angle(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix for a (not necessarily unit) axis."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def frame_from_z(z_axis, x_hint=None) -> np.ndarray:
    """Right-handed rotation whose third column is ``z_axis`` (normalized)."""
    z = np.asarray(z_axis, dtype=float)
    z = z / np.linalg.norm(z)
    if x_hint is None:
        x_hint = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    x = np.asarray(x_hint, dtype=float)
    x = x - z * (x @ z)
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    return np.column_stack([x, y, z])


def rotation_angle(R) -> float:
    """Geodesic angle (radians) of a rotation matrix."""
    c = (np.trace(R) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


# ---------------------------------------------------------------------------
# Point clouds and meshes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Points with optional per-point normals (normalized on construction)."""

    points: np.ndarray
    normals: Optional[np.ndarray] = None

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(p)):
            raise GeometryError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", _frozen(p))
        if self.normals is not None:
            n = np.asarray(self.normals, dtype=float).reshape(-1, 3)
            if n.shape != p.shape:
                raise GeometryError("normals must match points in count")
            norms = np.linalg.norm(n, axis=1)
            if not np.all(np.isfinite(n)) or np.any(norms < 1e-12):
                raise GeometryError("normals must be finite and non-zero")
            object.__setattr__(self, "normals", _frozen(n / norms[:, None]))

    def __len__(self):
        return len(self.points)

    @property
    def has_normals(self) -> bool:
        return self.normals is not None

    def subset(self, index) -> "PointCloud":
        n = None if self.normals is None else self.normals[index]
        return PointCloud(self.points[index], n)


def transform_points(pose: RigidPose, cloud: PointCloud) -> PointCloud:
    """Apply ``pose`` to every point; normals are only rotated."""
    normals = None if cloud.normals is None else pose.rotate(cloud.normals)
    return PointCloud(pose.apply(cloud.points), normals)


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Indexed triangle mesh.  Zero-area faces are dropped on construction."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(v)):
            raise GeometryError("mesh contains non-finite vertices")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise GeometryError("face index out of range")
        if f.size:
            tri = v[f]
            area2 = np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
            f = f[area2 > 1e-14]
        object.__setattr__(self, "vertices", _frozen(v))
        object.__setattr__(self, "faces", _frozen(f, np.int64))

    @property
    def is_empty(self) -> bool:
        return len(self.faces) == 0

    @property
    def triangles(self) -> np.ndarray:
        return self.vertices[self.faces]

    @property
    def face_normals(self) -> np.ndarray:
        t = self.triangles
        n = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
        return n / np.linalg.norm(n, axis=1)[:, None]

    @property
    def face_areas(self) -> np.ndarray:
        t = self.triangles
        return 0.5 * np.linalg.norm(np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0]), axis=1)

    @property
    def area(self) -> float:
        return float(self.face_areas.sum())

    def bounds(self):
        if self.is_empty:
            raise EmptyGeometry("empty mesh has no bounds")
        used = self.vertices[np.unique(self.faces)]
        return used.min(axis=0), used.max(axis=0)

    def transformed(self, pose: RigidPose) -> "TriMesh":
        return TriMesh(pose.apply(self.vertices), self.faces)


def merge_meshes(meshes: Iterable[TriMesh]) -> TriMesh:
    verts, faces, offset = [], [], 0
    for m in meshes:
        if m is None or m.is_empty:
            continue
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        offset += len(m.vertices)
    if not verts:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    return TriMesh(np.vstack(verts), np.vstack(faces))


_BOX_CORNERS = np.array(
    [[-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1], [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1]],
    dtype=float,
)
_BOX_FACES = np.array(
    [
        [0, 2, 1], [0, 3, 2],  # -z
        [4, 5, 6], [4, 6, 7],  # +z
        [0, 1, 5], [0, 5, 4],  # -y
        [3, 7, 6], [3, 6, 2],  # +y
        [0, 4, 7], [0, 7, 3],  # -x
        [1, 2, 6], [1, 6, 5],  # +x
    ]
)


def box_mesh(extents, pose: Optional[RigidPose] = None, center=None) -> TriMesh:
    """Closed 12-triangle box with outward-facing triangles."""
    half = 0.5 * np.asarray(extents, dtype=float)
    v = _BOX_CORNERS * half
    if center is not None:
        v = v + np.asarray(center, dtype=float)
    if pose is not None:
        v = pose.apply(v)
    return TriMesh(v, _BOX_FACES)


def convex_hull_mesh(points) -> TriMesh:
    """Convex hull of a 3D point set as an outward-oriented triangle mesh."""
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(p) < 4:
        raise DegenerateHull(len(p))
    try:
        hull = ConvexHull(p)
    except QhullError as exc:
        raise DegenerateHull(len(p), f"3D hull failed: {str(exc).splitlines()[0]}") from exc
    faces = hull.simplices.copy()
    tri = p[faces]
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    centroid = p[hull.vertices].mean(axis=0)
    flip = np.einsum("ij,ij->i", n, tri[:, 0] - centroid) < 0
    faces[flip] = faces[flip][:, ::-1]
    used, inv = np.unique(faces, return_inverse=True)
    return TriMesh(p[used], inv.reshape(-1, 3))


def sample_surface(mesh: TriMesh, n: int, rng: np.random.Generator):
    """Area-uniform surface samples; returns ``(points, normals, face_index)``."""
    if mesh.is_empty:
        raise EmptyGeometry("cannot sample an empty mesh")
    areas = mesh.face_areas
    face = rng.choice(len(areas), size=n, p=areas / areas.sum())
    r1 = rng.random(n)
    r2 = rng.random(n)
    s = np.sqrt(r1)
    w0, w1, w2 = 1.0 - s, s * (1.0 - r2), s * r2
    t = mesh.triangles[face]
    pts = w0[:, None] * t[:, 0] + w1[:, None] * t[:, 1] + w2[:, None] * t[:, 2]
    return pts, mesh.face_normals[face], face


# ---------------------------------------------------------------------------
# Planar polygons
# ---------------------------------------------------------------------------


def _cross2(o, a, b):
    return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0])


@dataclass(frozen=True, eq=False)
class Polygon2D:
    """Convex polygon with counter-clockwise vertices."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        if len(v) < 3:
            raise DegenerateHull(len(v))
        nxt = np.roll(v, -1, axis=0)
        if np.any(np.linalg.norm(nxt - v, axis=1) <= 1e-9):
            raise GeometryError("polygon has repeated vertices")
        cr = _cross2(v, nxt, np.roll(v, -2, axis=0))
        if np.any(cr < -COLLINEAR_EPS):
            raise GeometryError("polygon is not convex and counter-clockwise")
        object.__setattr__(self, "vertices", _frozen(v))

    def __len__(self):
        return len(self.vertices)

    @property
    def area(self) -> float:
        v = self.vertices
        return 0.5 * float(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))

    @property
    def centroid(self) -> np.ndarray:
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cr = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        a = cr.sum() / 2.0
        return np.array([((v[:, 0] + w[:, 0]) * cr).sum(), ((v[:, 1] + w[:, 1]) * cr).sum()]) / (6.0 * a)

    def contains(self, points, tol: float = INSIDE_TOL) -> np.ndarray:
        """Vectorized inclusive containment for an ``(N, 2)`` array."""
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        length = np.linalg.norm(e, axis=1)
        # signed distance of every point to every edge line, positive inside
        d = (e[:, 0][None, :] * (p[:, 1:2] - v[:, 1][None, :]) - e[:, 1][None, :] * (p[:, 0:1] - v[:, 0][None, :])) / length
        return np.all(d >= -tol, axis=1)

    def transformed(self, rotation2, translation2) -> "Polygon2D":
        R = np.asarray(rotation2, dtype=float)
        return Polygon2D(self.vertices @ R.T + np.asarray(translation2, dtype=float))


def convex_hull_2d(points) -> Polygon2D:
    """Counter-clockwise convex hull (monotone chain), collinear points dropped.

    Raises DegenerateHull for fewer than three points or a collinear set.
    """
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    n_in = len(p)
    if n_in < 3:
        raise DegenerateHull(n_in)
    p = np.unique(p, axis=0)  # lexicographic sort, duplicates removed
    if len(p) < 3:
        raise DegenerateHull(n_in)
    scale = max(1.0, float(np.abs(p).max()))
    eps = COLLINEAR_EPS * scale * scale

    if len(p) > 32:
        p = _drop_interior(p)
    pts = [(float(x), float(y)) for x, y in p]

    def half(seq):
        out = []
        for qx, qy in seq:
            while len(out) >= 2:
                (ox, oy), (ax, ay) = out[-2], out[-1]
                if (ax - ox) * (qy - oy) - (ay - oy) * (qx - ox) > eps:
                    break
                out.pop()
            out.append((qx, qy))
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        raise DegenerateHull(n_in)
    return Polygon2D(hull)


def _drop_interior(p):
    """Discard points strictly inside the polygon of extreme points (Akl-Toussaint)."""
    keys = np.column_stack([p[:, 0], p[:, 1], p[:, 0] + p[:, 1], p[:, 0] - p[:, 1]])
    ext = np.unique(np.concatenate([keys.argmin(axis=0), keys.argmax(axis=0)]))
    q = p[ext]
    c = q.mean(axis=0)
    q = q[np.argsort(np.arctan2(q[:, 1] - c[1], q[:, 0] - c[0]))]
    if len(q) < 3:
        return p
    a, b = q, np.roll(q, -1, axis=0)
    cr = (b[:, 0] - a[:, 0])[None] * (p[:, 1:2] - a[:, 1][None]) - (b[:, 1] - a[:, 1])[None] * (p[:, 0:1] - a[:, 0][None])
    strictly_inside = np.all(cr > 1e-12, axis=1)
    return p[~strictly_inside]


def point_in_polygon(p, poly: Polygon2D) -> bool:
    """Inclusive test; boundary points (within 1e-9 m) count as inside."""
    return bool(poly.contains(np.asarray(p, dtype=float).reshape(1, 2))[0])


def clip_convex_polygon(subject: Polygon2D, clip: Polygon2D) -> Optional[Polygon2D]:
    """Intersection of two convex polygons, or None when it has no area."""
    out = [np.asarray(v) for v in subject.vertices]
    cv = clip.vertices
    for i in range(len(cv)):
        a, b = cv[i], cv[(i + 1) % len(cv)]
        if not out:
            break
        inp, out = out, []
        for j in range(len(inp)):
            cur, prev = inp[j], inp[j - 1]
            cur_in = _cross2(a, b, cur) >= 0.0
            prev_in = _cross2(a, b, prev) >= 0.0
            if cur_in:
                if not prev_in:
                    out.append(_line_intersect(prev, cur, a, b))
                out.append(cur)
            elif prev_in:
                out.append(_line_intersect(prev, cur, a, b))
    if len(out) < 3:
        return None
    try:
        return convex_hull_2d(np.array(out))
    except (DegenerateHull, GeometryError):
        return None


def _line_intersect(p, q, a, b):
    d = q - p
    e = b - a
    denom = d[0] * e[1] - d[1] * e[0]
    t = ((a[0] - p[0]) * e[1] - (a[1] - p[1]) * e[0]) / denom
    return p + t * d


def rectangle(xmin, ymin, xmax, ymax) -> Polygon2D:
    return Polygon2D([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]])


def polygon_from_sequence(vertices: Sequence) -> Polygon2D:
    return Polygon2D(np.asarray(vertices, dtype=float))
