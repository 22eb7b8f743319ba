"""Grasp candidates, the simplified gripper model and reachability.

Grasp frame convention: the gripper closes along its x axis and approaches
the object moving along its -z axis, so the palm sits on the +z side of the
grasp origin (the midpoint between the fingertips' contact points).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .distance import tri_tri_distance
from .errors import EmptyGeometry, MissingNormals
from .geometry import PointCloud, RigidPose, TriMesh, axis_angle, box_mesh, merge_meshes


@dataclass(frozen=True, eq=False)
class GraspCandidate:
    pose: RigidPose
    width: float
    quality: float

    def __post_init__(self):
        if not 0.0 <= self.quality <= 1.0:
            raise ValueError("grasp quality must lie in [0, 1]")
        if not self.width > 0:
            raise ValueError("grasp width must be positive")


@dataclass(frozen=True)
class GripperModel:
    """Three boxes: a palm and two fingers (extents in meters, gripper frame)."""

    palm: tuple = (0.09, 0.09, 0.05)
    finger: tuple = (0.02, 0.01, 0.06)
    max_opening: float = 0.085
    # how far the fingertips reach past the grasp origin along -z
    tip_depth: float = 0.01

    def __post_init__(self):
        if min(self.palm) <= 0 or min(self.finger) <= 0 or self.max_opening <= 0:
            raise ValueError("gripper extents must be positive")

    def boxes(self, width: float):
        """``(centers, half_extents)`` of palm, left and right finger in the grasp frame."""
        fx, fy, fz = self.finger
        px, py, pz = self.palm
        z_f = fz / 2 - self.tip_depth
        z_p = fz - self.tip_depth + pz / 2
        off = width / 2 + fx / 2
        centers = np.array([[0.0, 0.0, z_p], [-off, 0.0, z_f], [off, 0.0, z_f]])
        halves = 0.5 * np.array([self.palm, self.finger, self.finger], dtype=float)
        return centers, halves

    def mesh(self, grasp: GraspCandidate) -> TriMesh:
        """The three posed boxes as one triangle mesh."""
        centers, halves = self.boxes(grasp.width)
        return merge_meshes(
            box_mesh(2 * h, grasp.pose @ RigidPose.from_translation(c)) for c, h in zip(centers, halves)
        )


# ---------------------------------------------------------------------------
# Reachability
# ---------------------------------------------------------------------------


class WorkspaceBox:
    """Default reachability predicate: the grasp origin lies in an axis-aligned box."""

    def __init__(self, lower=(-1.0, -1.0, -0.5), upper=(1.0, 1.0, 1.5)):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)

    def __call__(self, pose: RigidPose) -> bool:
        t = pose.translation
        return bool(np.all(t >= self.lower) and np.all(t <= self.upper))

    def batch(self, translations) -> np.ndarray:
        t = np.asarray(translations, dtype=float)
        return np.all((t >= self.lower) & (t <= self.upper), axis=-1)

    def __repr__(self):
        return f"WorkspaceBox(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


def always_reachable(pose: RigidPose) -> bool:
    return True


def reachable(pred: Callable[[RigidPose], bool], g: GraspCandidate) -> int:
    return 1 if pred(g.pose) else 0


# ---------------------------------------------------------------------------
# Frame changes
# ---------------------------------------------------------------------------


def transform_grasp(g: GraspCandidate, m_o: RigidPose, m_p: RigidPose) -> GraspCandidate:
    """Carry a grasp rigidly with its object from pose ``m_o`` to pose ``m_p``."""
    return GraspCandidate(m_p @ m_o.inverse() @ g.pose, g.width, g.quality)


def grasp_matrices(grasps: Sequence[GraspCandidate]) -> np.ndarray:
    return np.stack([g.pose.matrix for g in grasps]) if grasps else np.zeros((0, 4, 4))


# ---------------------------------------------------------------------------
# Synthetic antipodal sampler
# ---------------------------------------------------------------------------


def sample_antipodal_grasps(
    cloud: PointCloud,
    gripper: GripperModel = GripperModel(),
    n: int = 100,
    seed: int = 0,
    friction_cone_deg: float = 15.0,
    clearance: float = 0.01,
    max_attempts: int = 50,
) -> List[GraspCandidate]:
    """Sample up to ``n`` two-finger grasps whose contacts face each other.

    For a random first contact the partner is the point, within reach of the
    opening, that lies closest to the inward normal ray.  Quality is the
    antipodality ``max(0, -n1 . n2)`` scaled down when the contacts use up
    nearly the whole opening.
    """
    if not cloud.has_normals:
        raise MissingNormals("antipodal sampling needs per-point normals")
    if n < 1:
        raise ValueError("n must be at least 1")
    pts, nrm = cloud.points, cloud.normals
    rng = np.random.default_rng(seed)
    tree = cKDTree(pts)
    cos_cone = np.cos(np.radians(friction_cone_deg))
    out: List[GraspCandidate] = []
    for _ in range(n * max_attempts):
        if len(out) >= n:
            break
        i = int(rng.integers(len(pts)))
        p1, n1 = pts[i], nrm[i]
        cand = np.array(tree.query_ball_point(p1, gripper.max_opening), dtype=np.int64)
        if len(cand) == 0:
            continue
        d = pts[cand] - p1
        dist = np.linalg.norm(d, axis=1)
        ok = dist > 1e-3
        cand, d, dist = cand[ok], d[ok], dist[ok]
        if len(cand) == 0:
            continue
        u = d / dist[:, None]
        along = -(u @ n1)
        facing = -(nrm[cand] @ n1)
        good = (along >= cos_cone) & (-(np.einsum("ij,ij->i", u, nrm[cand])) <= -cos_cone)
        if not np.any(good):
            continue
        j = np.flatnonzero(good)[np.argmax(facing[good] + along[good])]
        sep = dist[j]
        p2, n2 = pts[cand[j]], nrm[cand[j]]
        antipodal = max(0.0, -float(n1 @ n2))
        slack = np.clip((gripper.max_opening - sep) / clearance, 0.0, 1.0)
        quality = float(np.clip(antipodal * slack, 0.0, 1.0))
        if quality <= 0.0:
            continue
        width = min(gripper.max_opening, sep + clearance)
        x = (p2 - p1) / sep
        # random approach direction orthogonal to the closing axis
        ref = np.array([0.0, 0.0, 1.0]) if abs(x[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        z0 = ref - x * (ref @ x)
        z0 /= np.linalg.norm(z0)
        z = axis_angle(x, rng.uniform(0.0, 2 * np.pi)) @ z0
        y = np.cross(z, x)
        R = np.column_stack([x, y, z])
        out.append(GraspCandidate(RigidPose(R, 0.5 * (p1 + p2)), float(width), quality))
    return out


def make_grasp(center, closing_axis, approach, width: float, quality: float = 1.0) -> GraspCandidate:
    """Build a grasp from its center, closing axis and approach direction.

    ``approach`` is the direction the gripper travels toward the object; the
    grasp frame's z axis points the opposite way.
    """
    x = np.asarray(closing_axis, dtype=float)
    x = x / np.linalg.norm(x)
    z = -np.asarray(approach, dtype=float)
    z = z - x * (z @ x)
    z = z / np.linalg.norm(z)
    y = np.cross(z, x)
    return GraspCandidate(RigidPose(np.column_stack([x, y, z]), center), float(width), float(quality))


# ---------------------------------------------------------------------------
# Gripper collision
# ---------------------------------------------------------------------------


def gripper_collides(g: GraspCandidate, env: TriMesh, margin: float = 0.0,
                     gripper: GripperModel = GripperModel()) -> bool:
    """True iff any posed gripper box is within ``margin`` of ``env``."""
    return bool(gripper_collisions(g.pose.matrix[None], np.array([g.width]), env, margin, gripper)[0])


def gripper_collisions(poses, widths, env: TriMesh, margin: float = 0.0,
                       gripper: GripperModel = GripperModel()) -> np.ndarray:
    """Batched gripper-vs-environment test for ``(N, 4, 4)`` grasp poses.

    Boxes are treated as solids: a box that swallows a triangle collides.
    """
    if margin < 0:
        raise ValueError("margin must be non-negative")
    if env.is_empty:
        raise EmptyGeometry("environment mesh is empty")
    poses = np.asarray(poses, dtype=float).reshape(-1, 4, 4)
    widths = np.asarray(widths, dtype=float).reshape(-1)
    n = len(poses)
    if n == 0:
        return np.zeros(0, dtype=bool)
    R = poses[:, :3, :3]
    t = poses[:, :3, 3]
    hits = np.zeros(n, dtype=bool)
    centers0, halves0 = gripper.boxes(0.0)
    for b in range(3):
        local = np.tile(centers0[b], (n, 1))
        if b == 1:
            local[:, 0] -= widths / 2
        elif b == 2:
            local[:, 0] += widths / 2
        centers = np.einsum("nij,nj->ni", R, local) + t
        hits |= boxes_hit_mesh(centers, R, np.broadcast_to(halves0[b], (n, 3)), env, margin)
    return hits


def boxes_hit_mesh(centers, rotations, halves, mesh: TriMesh, margin: float) -> np.ndarray:
    """For each oriented box, whether it lies within ``margin`` of ``mesh``.

    Box-triangle pairs whose world-axis bounds overlap go through the
    separating-axis test, one axis at a time, dropping pairs as soon as an
    axis separates them by more than ``margin``.  Overlapping survivors
    collide; the rest get the exact triangle-distance check.
    """
    centers = np.asarray(centers, dtype=float)
    rotations = np.asarray(rotations, dtype=float)
    halves = np.asarray(halves, dtype=float)
    n = len(centers)
    hit = np.zeros(n, dtype=bool)
    tris = mesh.triangles
    it, ib = _overlapping_bounds(centers, rotations, halves, tris, margin)
    if len(it) == 0:
        return hit
    c, R, h = centers[ib], rotations[ib], halves[ib]
    v = tris[it] - c[:, None, :]
    e = v[:, [1, 2, 0]] - v
    axes = [lambda k: np.cross(e[k, 0], e[k, 1])]
    axes += [lambda k, i=i: R[k, :, i] for i in range(3)]
    axes += [lambda k, i=i, j=j: np.cross(R[k, :, i], e[k, j]) for i in range(3) for j in range(3)]
    alive = np.arange(len(it))
    best = np.full(len(it), -np.inf)
    for axis in axes:
        gap = _axis_gap(axis(alive), v[alive], R[alive], h[alive])
        best[alive] = np.maximum(best[alive], gap)
        alive = alive[gap <= margin]
        if len(alive) == 0:
            return hit
    overlap = best[alive] <= 0.0
    hit[ib[alive[overlap]]] = True
    todo = alive[~overlap]
    todo = todo[~hit[ib[todo]]]
    if len(todo):
        box_tris = _box_triangles(c[todo], R[todo], h[todo])  # (M, 12, 3, 3)
        d = tri_tri_distance(box_tris.reshape(-1, 3, 3), np.repeat(tris[it[todo]], 12, axis=0))
        close = d.reshape(len(todo), 12).min(axis=1) <= margin
        hit[ib[todo[close]]] = True
    return hit


def _overlapping_bounds(centers, rotations, halves, tris, margin, budget=4_000_000):
    """Triangle/box index pairs whose axis-aligned bounds come within ``margin``."""
    ext = np.einsum("nij,nj->ni", np.abs(rotations), halves) + margin
    blo, bhi = centers - ext, centers + ext
    tlo, thi = tris.min(axis=1), tris.max(axis=1)
    step = max(1, budget // max(len(centers), 1))
    its, ibs = [], []
    for s in range(0, len(tris), step):
        m = np.all((blo[None] <= thi[s:s + step, None]) & (bhi[None] >= tlo[s:s + step, None]), axis=2)
        t, b = np.nonzero(m)
        its.append(t + s)
        ibs.append(b)
    return np.concatenate(its), np.concatenate(ibs)


def _axis_gap(a, v, R, h):
    """Gap between a triangle (vertices ``v`` relative to the box center) and a box along ``a``."""
    norm = np.sqrt(np.einsum("mj,mj->m", a, a))
    valid = norm > 1e-12
    a = a / np.where(valid, norm, 1.0)[:, None]
    p = np.einsum("mkj,mj->mk", v, a)
    r = np.einsum("mi,mi->m", np.abs(np.einsum("mji,mj->mi", R, a)), h)
    gap = np.maximum(p.min(axis=1) - r, -p.max(axis=1) - r)
    return np.where(valid, gap, -np.inf)


_CORNERS = np.array(
    [[-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1], [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1]],
    dtype=float,
)
_FACES = np.array(
    [[0, 2, 1], [0, 3, 2], [4, 5, 6], [4, 6, 7], [0, 1, 5], [0, 5, 4],
     [3, 7, 6], [3, 6, 2], [0, 4, 7], [0, 7, 3], [1, 2, 6], [1, 6, 5]]
)


def _box_triangles(c, R, h):
    corners = np.einsum("mij,mkj->mki", R, _CORNERS[None] * h[:, None, :]) + c[:, None, :]
    return corners[:, _FACES]
