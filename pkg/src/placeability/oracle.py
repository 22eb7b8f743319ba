"""Ground-truth harness for the stability term.

Synthetic objects carry an exact center of mass, so the quasi-static
question "does the CoM project inside the support polygon?" has an exact
answer.  The sweeps below push an object over a table edge or tilt its
support plane, score every step with the point-cloud metric and compare the
score's 0.5 crossing with the analytic tipping point.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .geometry import (
    PointCloud,
    Polygon2D,
    RigidPose,
    TriMesh,
    box_mesh,
    clip_convex_polygon,
    convex_hull_2d,
    rectangle,
    rot_y,
    rot_z,
    rotation_angle,
    sample_surface,
)
from .stability import StabilityParams, evaluate_placement_stability

TABLE_HALF_SIZE = 5.0


@dataclass(frozen=True, eq=False)
class SyntheticObject:
    """A mesh with known mass distribution, resting on z = 0 in its own frame."""

    mesh: TriMesh
    com: np.ndarray
    half_extents: np.ndarray  # footprint half-extents along x and y
    label: str

    def __post_init__(self):
        com = np.asarray(self.com, dtype=float)
        lo, hi = self.mesh.bounds()
        if np.any(com < lo - 1e-12) or np.any(com > hi + 1e-12):
            raise ValueError("center of mass must lie inside the mesh bounding box")
        object.__setattr__(self, "com", com)
        object.__setattr__(self, "half_extents", np.asarray(self.half_extents, dtype=float))

    def footprint(self, tol: float = 1e-9) -> Polygon2D:
        """Convex hull of the vertices touching the ground plane."""
        v = self.mesh.vertices
        z0 = v[:, 2].min()
        return convex_hull_2d(v[v[:, 2] <= z0 + tol][:, :2])

    def dense_cloud(self, n: int = 6000, noise: float = 0.0, seed: int = 0) -> PointCloud:
        """Full-coverage, area-uniform surface cloud."""
        rng = np.random.default_rng(seed)
        pts, nrm, _ = sample_surface(self.mesh, n, rng)
        if noise > 0:
            pts = pts + nrm * rng.normal(0.0, noise, size=(n, 1))
        return PointCloud(pts, nrm)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def uniform_box(size=(0.1, 0.1, 0.2), label="box") -> SyntheticObject:
    size = np.asarray(size, dtype=float)
    mesh = box_mesh(size, center=[0.0, 0.0, size[2] / 2])
    return SyntheticObject(mesh, [0.0, 0.0, size[2] / 2], size[:2] / 2, label)


def cylinder(radius=0.04, height=0.15, segments=64, label="cylinder") -> SyntheticObject:
    return SyntheticObject(cylinder_mesh(radius, height, segments), [0.0, 0.0, height / 2], [radius, radius], label)


def l_shape(length=0.2, width=0.1, base_height=0.03, upright_length=0.04, upright_height=0.2, label="l-shape"):
    """Plate of ``length`` x ``width`` x ``base_height`` with an upright over its +x end."""
    L, W, h1, a, h2 = length, width, base_height, upright_length, upright_height
    profile = np.array([[0, 0], [L, 0], [L, h1 + h2], [L - a, h1 + h2], [L - a, h1], [0, h1]], dtype=float)
    profile[:, 0] -= L / 2
    mesh = prism_mesh_xz(profile, W)
    v_base, v_up = L * h1, a * h2
    cx = (v_base * 0.0 + v_up * (L / 2 - a / 2)) / (v_base + v_up)
    cz = (v_base * h1 / 2 + v_up * (h1 + h2 / 2)) / (v_base + v_up)
    return SyntheticObject(mesh, [cx, 0.0, cz], [L / 2, W / 2], label)


def offset_mass_box(length=0.2, width=0.1, offset=0.25, upright_length=0.02, label="offset-mass box"):
    """Box-footprint block whose center of mass sits ``offset * length`` off-center along +x.

    The offset is carried by the shape: a thin plate with a tall upright over
    one end.  Plate and upright heights are solved so that the uniform-density
    CoM and the surface-area centroid (what a full scan sees) coincide, which
    is what lets a purely geometric metric recover the offset.
    """
    L, W, a = length, width, upright_length
    target = 0.5 + offset

    def centroids(h1, h2):
        xv = (L * h1 * L / 2 + a * h2 * (L - a / 2)) / (L * h1 + a * h2)
        faces = [
            (L * W, L / 2), ((L - a) * W, (L - a) / 2), (a * W, L - a / 2),
            (2 * L * h1, L / 2), (W * h1, 0.0), (W * h1, L),
            (2 * a * h2, L - a / 2), (W * h2, L - a), (W * h2, L),
        ]
        xs = sum(A * x for A, x in faces) / sum(A for A, _ in faces)
        return xv / L, xs / L

    def h2_for(h1):
        return brentq(lambda h2: centroids(h1, h2)[0] - target, 1e-6, 100.0)

    h1 = brentq(lambda h1: centroids(h1, h2_for(h1))[1] - target, 1e-4 * L, 2.0 * L)
    obj = l_shape(L, W, h1, a, h2_for(h1), label=label)
    return obj


def cylinder_mesh(radius, height, segments=64) -> TriMesh:
    ang = np.linspace(0.0, 2 * np.pi, segments, endpoint=False)
    ring = np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])
    v = np.vstack([
        np.column_stack([ring, np.zeros(segments)]),
        np.column_stack([ring, np.full(segments, height)]),
        [[0.0, 0.0, 0.0], [0.0, 0.0, height]],
    ])
    bc, tc = 2 * segments, 2 * segments + 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces += [[i, j, segments + j], [i, segments + j, segments + i]]
        faces += [[bc, j, i], [tc, segments + i, segments + j]]
    return TriMesh(v, faces)


def prism_mesh_xz(profile, width) -> TriMesh:
    """Extrude a counter-clockwise xz profile polygon along y from -w/2 to w/2."""
    prof = np.asarray(profile, dtype=float)
    n = len(prof)
    front = np.column_stack([prof[:, 0], np.full(n, -width / 2), prof[:, 1]])
    back = np.column_stack([prof[:, 0], np.full(n, width / 2), prof[:, 1]])
    v = np.vstack([front, back])
    faces = []
    cap = _ear_clip(prof)
    # a CCW (x, z) triangle already faces -y, so only the back cap is flipped
    for a, b, c in cap:
        faces.append([a, b, c])
        faces.append([n + a, n + c, n + b])
    for i in range(n):
        j = (i + 1) % n
        faces += [[i, n + j, j], [i, n + i, n + j]]
    return TriMesh(v, faces)


def _ear_clip(poly):
    idx = list(range(len(poly)))
    tris = []

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    guard = 0
    while len(idx) > 3 and guard < 10_000:
        guard += 1
        for k in range(len(idx)):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
            a, b, c = poly[i0], poly[i1], poly[i2]
            if cross(a, b, c) <= 1e-15:
                continue
            if any(
                cross(a, b, poly[m]) >= 0 and cross(b, c, poly[m]) >= 0 and cross(c, a, poly[m]) >= 0
                for m in idx if m not in (i0, i1, i2)
            ):
                continue
            tris.append((i0, i1, i2))
            idx.pop(k)
            break
    tris.append(tuple(idx))
    return tris


# ---------------------------------------------------------------------------
# Quasi-static oracle
# ---------------------------------------------------------------------------


def quasi_static_stable(obj: SyntheticObject, pose: RigidPose, support: Polygon2D) -> bool:
    """True iff the posed true CoM projects vertically inside ``support`` (inclusive)."""
    c = pose.apply(obj.com)
    return bool(support.contains(c[:2])[0])


def table_region(edge_x: float = 0.0) -> Polygon2D:
    """A large table whose only reachable edge is the line x = ``edge_x``."""
    return rectangle(edge_x - 2 * TABLE_HALF_SIZE, -TABLE_HALF_SIZE, edge_x, TABLE_HALF_SIZE)


def edge_pose(obj: SyntheticObject, overhang: float, direction: int = +1, yaw: float = 0.0) -> RigidPose:
    """Pose placing ``obj`` so that ``overhang`` of its footprint length is past x = 0.

    ``direction=+1`` pushes the object's +x side over the edge; ``-1`` turns
    it 180 degrees about z first, so the -x side leads.  ``yaw`` (radians)
    adds a further turn about z; the footprint length is then measured along
    world x.
    """
    R = rot_z(yaw) if direction > 0 else rot_z(yaw) @ np.diag([-1.0, -1.0, 1.0])
    fp = obj.footprint().vertices @ R[:2, :2].T
    x_lo, x_hi = fp[:, 0].min(), fp[:, 0].max()
    length = x_hi - x_lo
    shift = overhang * length - x_hi
    return RigidPose(R, [shift, 0.0, 0.0])


def oracle_edge_threshold(obj: SyntheticObject, direction: int = +1, tol: float = 1e-10, yaw: float = 0.0) -> float:
    """Overhang fraction at which the true CoM crosses the edge (bisection)."""

    base = edge_pose(obj, 0.0, direction, yaw)
    R2 = base.rotation[:2, :2]
    footprint = obj.footprint()
    length = np.ptp(footprint.vertices @ R2.T, axis=0)[0]
    table = table_region()

    def stable(f):
        pose = RigidPose(base.rotation, base.translation + [f * length, 0.0, 0.0])
        clipped = clip_convex_polygon(footprint.transformed(R2, pose.translation[:2]), table)
        return clipped is not None and quasi_static_stable(obj, pose, clipped)

    lo, hi = 0.0, 1.0
    if not stable(lo):
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if stable(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def incline_pose(obj: SyntheticObject, angle_deg: float) -> RigidPose:
    """Object resting on a plane tilted by ``angle_deg`` about y (downhill is +x)."""
    return RigidPose(rot_y(math.radians(angle_deg)), np.zeros(3))


def oracle_incline_angle(obj: SyntheticObject, direction: int = +1) -> float:
    """Analytic tipping angle in degrees: atan(downhill half-extent / CoM height)."""
    fp = obj.footprint().vertices
    reach = (fp[:, 0].max() - obj.com[0]) if direction > 0 else (obj.com[0] - fp[:, 0].min())
    return math.degrees(math.atan2(reach, obj.com[2] - obj.mesh.vertices[:, 2].min()))


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    abscissa: np.ndarray
    scores: np.ndarray
    estimated_threshold: float
    oracle_threshold: float
    kind: str = "edge"
    inlier_fractions: Optional[np.ndarray] = None

    @property
    def error(self) -> float:
        return abs(self.estimated_threshold - self.oracle_threshold)

    def to_csv(self) -> str:
        col = "overhang_fraction" if self.kind == "edge" else "angle_deg"
        buf = io.StringIO()
        buf.write(f"{col},score,inlier_fraction\n")
        pin = self.inlier_fractions if self.inlier_fractions is not None else np.full(len(self.scores), np.nan)
        for x, s, p in zip(self.abscissa, self.scores, pin):
            buf.write(f"{_fmt(x)},{_fmt(s)},{_fmt(p)}\n")
        buf.write(
            f"# estimated_threshold={_fmt(self.estimated_threshold)} oracle_threshold={_fmt(self.oracle_threshold)}\n"
        )
        return buf.getvalue()


def _fmt(x) -> str:
    return format(float(x), ".9g")


def first_crossing(x, y, level: float = 0.5) -> float:
    """Linear interpolation of the first downward crossing of ``level``.

    Returns ``x[0]`` if the curve starts below ``level`` and ``nan`` if it
    never drops below it.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y[0] < level:
        return float(x[0])
    for i in range(1, len(y)):
        if y[i] < level:
            y0, y1 = y[i - 1], y[i]
            return float(x[i - 1] + (level - y0) * (x[i] - x[i - 1]) / (y1 - y0))
    return float("nan")


def edge_sweep(
    obj: SyntheticObject,
    cloud: PointCloud,
    steps: int = 101,
    params: StabilityParams = StabilityParams(),
    direction: int = +1,
    seed: int = 0,
) -> SweepResult:
    """Slide ``obj`` (with its observed ``cloud``, object frame) over the table edge."""
    if steps < 10:
        raise ValueError("edge sweep needs at least 10 steps")
    fractions = np.linspace(0.0, 1.0, steps)
    region = table_region()
    scores, pins = [], []
    for f in fractions:
        res = evaluate_placement_stability(
            cloud, edge_pose(obj, f, direction), params, seed=seed, support_region=region
        )
        scores.append(res.score)
        pins.append(res.inlier_fraction)
    scores = np.array(scores)
    return SweepResult(
        fractions, scores, first_crossing(fractions, scores), oracle_edge_threshold(obj, direction),
        "edge", np.array(pins),
    )


def incline_sweep(
    obj: SyntheticObject,
    cloud: PointCloud,
    angles: Sequence[float] = tuple(np.linspace(0.0, 60.0, 121)),
    params: StabilityParams = StabilityParams(),
    direction: int = +1,
    seed: int = 0,
) -> SweepResult:
    """Tilt the support plane through ``angles`` (degrees) and score each step."""
    angles = np.asarray(angles, dtype=float)
    if np.any(np.diff(angles) <= 0) or angles.min() < 0 or angles.max() > 60:
        raise ValueError("angles must be strictly increasing within [0, 60] degrees")
    flip = RigidPose.identity() if direction > 0 else RigidPose(np.diag([-1.0, -1.0, 1.0]), np.zeros(3))
    scores, pins = [], []
    for a in angles:
        pose = incline_pose(obj, a) @ flip
        normal = pose.rotation[:, 2]
        res = evaluate_placement_stability(cloud, pose, params, seed=seed, support_normal=normal)
        scores.append(res.score)
        pins.append(res.inlier_fraction)
    scores = np.array(scores)
    return SweepResult(
        angles, scores, first_crossing(angles, scores), oracle_incline_angle(obj, direction),
        "incline", np.array(pins),
    )


# ---------------------------------------------------------------------------
# Partial views
# ---------------------------------------------------------------------------


def _visible(points, normals, viewpoint, mesh: TriMesh, face_index, chunk=4096):
    d = viewpoint - points
    front = np.einsum("ij,ij->i", d, normals) > 0
    tri = mesh.triangles
    a, e1, e2 = tri[:, 0], tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]
    occluded = np.zeros(len(points), dtype=bool)
    idx = np.flatnonzero(front)
    for s in range(0, len(idx), chunk):
        sel = idx[s:s + chunk]
        o = points[sel][:, None, :]
        dirs = d[sel][:, None, :]
        # Möller-Trumbore, ray parameter in (0, 1) toward the viewpoint
        pvec = np.cross(dirs, e2[None])
        det = np.einsum("ijk,jk->ij", pvec, e1)
        ok = np.abs(det) > 1e-15
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        tvec = o - a[None]
        u = np.einsum("ijk,ijk->ij", tvec, pvec) * inv
        qvec = np.cross(tvec, e1[None])
        v = np.einsum("ijk,ijk->ij", dirs, qvec) * inv
        t = np.einsum("ijk,jk->ij", qvec, e2) * inv
        hit = ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > 1e-9) & (t < 1.0)
        hit[np.arange(len(sel)), face_index[sel]] = False
        occluded[sel] = hit.any(axis=1)
    return front & ~occluded


def synthesize_partial_cloud(
    mesh: TriMesh,
    viewpoints,
    noise: float = 0.0,
    seed: int = 0,
    n: int = 8000,
):
    """Simulated scan from one or more viewpoints.

    Samples the surface uniformly by area, keeps samples that face at least
    one viewpoint and are not hidden behind other triangles, then perturbs
    them along their normals with Gaussian noise.  Returns the cloud and the
    covered-area fraction (visible share of the area-uniform samples).
    """
    vps = np.atleast_2d(np.asarray(viewpoints, dtype=float))
    if len(vps) == 0:
        raise ValueError("at least one viewpoint is required")
    if noise < 0:
        raise ValueError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    pts, nrm, face = sample_surface(mesh, n, rng)
    seen = np.zeros(n, dtype=bool)
    for vp in vps:
        seen |= _visible(pts, nrm, vp, mesh, face)
    pts, nrm = pts[seen], nrm[seen]
    if noise > 0:
        pts = pts + nrm * rng.normal(0.0, noise, size=(len(pts), 1))
    return PointCloud(pts, nrm), float(seen.mean())


def viewpoints_around(target, count: int, seed: int = 0, distance: float = 0.8,
                      elevation_deg=(20.0, 60.0)) -> np.ndarray:
    """``count`` viewpoints spread evenly in azimuth (random phase) above ``target``."""
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0.0, 2 * np.pi)
    az = phase + 2 * np.pi * np.arange(count) / count
    el = np.radians(rng.uniform(*elevation_deg, size=count))
    dirs = np.column_stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)])
    return np.asarray(target, dtype=float) + distance * dirs


# ---------------------------------------------------------------------------
# Pose deviation
# ---------------------------------------------------------------------------


def pose_deviation(before: RigidPose, after: RigidPose):
    """``(rotation_deg, translation_cm, l2)`` between two poses.

    ``l2`` is the Frobenius norm of the difference of the 4x4 homogeneous
    matrices (translation in meters).
    """
    rot = math.degrees(rotation_angle(before.rotation.T @ after.rotation))
    trans = 100.0 * float(np.linalg.norm(after.translation - before.translation))
    l2 = float(np.linalg.norm(after.matrix - before.matrix))
    return rot, trans, l2
