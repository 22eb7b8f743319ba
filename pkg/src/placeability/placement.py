"""Placement candidates in a target region and clearance-based packing heuristics."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .distance import mesh_min_distance, meshes_collide
from .errors import EmptyGeometry
from .geometry import (
    PointCloud,
    Polygon2D,
    RigidPose,
    TriMesh,
    convex_hull_2d,
    convex_hull_mesh,
    frame_from_z,
    rot_x,
    rot_y,
    rot_z,
    sample_surface,
)

SUPPORT_ALLOWANCE = 0.002

ORIENTATION_LABELS = ("observed", "+pitch90", "-pitch90", "+roll90", "-roll90", "flip")
_ORIENTATIONS = (
    np.eye(3),
    rot_x(np.pi / 2),
    rot_x(-np.pi / 2),
    rot_y(np.pi / 2),
    rot_y(-np.pi / 2),
    rot_x(np.pi),
)


@dataclass(frozen=True, eq=False)
class ObjectModel:
    """An observed object: its cloud in the world, the cloud's convex hull and its pose ``m_o``.

    The object frame is the cloud centroid with world-aligned axes unless a
    pose is given explicitly.
    """

    cloud: PointCloud
    pose: RigidPose
    hull: TriMesh

    @classmethod
    def from_cloud(cls, cloud: PointCloud, pose: Optional[RigidPose] = None) -> "ObjectModel":
        if len(cloud) == 0:
            raise EmptyGeometry("object cloud is empty")
        if pose is None:
            pose = RigidPose.from_translation(cloud.points.mean(axis=0))
        return cls(cloud, pose, convex_hull_mesh(cloud.points))

    def local_cloud(self) -> PointCloud:
        """The cloud expressed in the object frame."""
        inv = self.pose.inverse()
        return PointCloud(inv.apply(self.cloud.points),
                          None if self.cloud.normals is None else inv.rotate(self.cloud.normals))

    def local_hull(self) -> TriMesh:
        return self.hull.transformed(self.pose.inverse())

    def cloud_at(self, m_p: RigidPose) -> np.ndarray:
        """World coordinates of the cloud after moving the object to ``m_p``."""
        return (m_p @ self.pose.inverse()).apply(self.cloud.points)


@dataclass(frozen=True, eq=False)
class TargetRegion:
    """Where objects may be put: support surfaces, obstacles and other objects.

    ``environment`` is everything a gripper or object must not hit; it
    normally includes the support surfaces themselves.
    """

    support: TriMesh
    environment: Optional[TriMesh] = None
    objects: Tuple[TriMesh, ...] = ()

    def __post_init__(self):
        if self.support.is_empty:
            raise EmptyGeometry("target region needs a non-empty support mesh")
        object.__setattr__(self, "objects", tuple(self.objects))

    @property
    def obstacles(self) -> TriMesh:
        return self.support if self.environment is None else self.environment

    def footprint(self, face: int) -> Polygon2D:
        """World-xy outline of the planar support patch containing ``face``.

        The patch is every support triangle sharing the face's plane; its
        outline is the convex hull of their vertices.
        """
        n = self.support.face_normals
        tri = self.support.triangles
        d = np.einsum("ij,ij->i", n, tri[:, 0])
        same = (n @ n[face] > 1 - 1e-9) & (np.abs(d - d[face]) < 1e-6)
        return convex_hull_2d(tri[same].reshape(-1, 3)[:, :2])


@dataclass(frozen=True, eq=False)
class PlacementCandidate:
    """A 6-DoF object pose on the support, with the surface point it rests on."""

    pose: RigidPose
    label: str = "observed"
    surface_point: np.ndarray = field(default_factory=lambda: np.zeros(3))
    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    face: int = -1
    scores: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.label not in ORIENTATION_LABELS:
            raise ValueError(f"unknown orientation label {self.label!r}")

    def with_scores(self, **scores) -> "PlacementCandidate":
        return replace(self, scores={**self.scores, **scores})


@dataclass(frozen=True)
class PackingHeuristicParams:
    tau: float = 0.05
    k: float = 50.0
    margin: float = 0.005
    mode: str = "dense"

    def __post_init__(self):
        if self.mode not in ("dense", "sparse"):
            raise ValueError("mode must be 'dense' or 'sparse'")
        if not self.k > 0:
            raise ValueError("decay rate k must be positive")
        if not self.tau > self.margin >= 0:
            raise ValueError("require tau > margin >= 0")


def orientation_set(m: RigidPose) -> List[RigidPose]:
    """``m`` composed with identity, the four quarter turns about x and y, and a half turn about x."""
    return [m @ RigidPose.from_rotation(R) for R in _ORIENTATIONS]


def rest_on_surface(local_points: np.ndarray, rotation: np.ndarray, point, normal) -> RigidPose:
    """Pose with the given rotation whose lowest point along ``normal`` touches ``point``.

    The object-frame origin lands on the normal line through ``point``.
    """
    n = np.asarray(normal, dtype=float)
    lowest = (local_points @ rotation.T @ n).min()
    return RigidPose(rotation, np.asarray(point, dtype=float) - lowest * n)


def sample_placement_poses(
    region: TargetRegion,
    obj: ObjectModel,
    n: int,
    seed: int = 0,
    orientations: bool = False,
) -> List[PlacementCandidate]:
    """Sample ``n`` resting poses on the support surface.

    Surface points are area-uniform; each frame aligns z with the face normal
    and applies a uniform random yaw.  The object keeps its observed
    orientation relative to its support.  With ``orientations`` every sample
    is expanded into the six orientations of :func:`orientation_set`.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    points, normals, faces = sample_surface(region.support, n, rng)
    yaws = rng.uniform(0.0, 2.0 * np.pi, n)
    local = obj.local_cloud().points
    R_o = obj.pose.rotation
    out = []
    for p, nrm, f, yaw in zip(points, normals, faces, yaws):
        frame = RigidPose.from_rotation(frame_from_z(nrm) @ rot_z(yaw))
        poses = orientation_set(frame) if orientations else [frame]
        for label, m in zip(ORIENTATION_LABELS, poses):
            R = m.rotation @ R_o
            out.append(PlacementCandidate(rest_on_surface(local, R, p, nrm), label, p, nrm, int(f)))
    return out


def expand_orientations(cand: PlacementCandidate, obj: ObjectModel) -> List[PlacementCandidate]:
    """The six orientation variants of a sampled candidate, resting on the same point."""
    frame = RigidPose.from_rotation(cand.pose.rotation @ obj.pose.rotation.T)
    local = obj.local_cloud().points
    return [
        PlacementCandidate(rest_on_surface(local, m.rotation @ obj.pose.rotation, cand.surface_point, cand.normal),
                           label, cand.surface_point, cand.normal, cand.face)
        for label, m in zip(ORIENTATION_LABELS, orientation_set(frame))
    ]


def posed_hull(hull_local: TriMesh, cand: PlacementCandidate, lift: float = 0.0) -> TriMesh:
    pose = RigidPose.from_translation(lift * np.asarray(cand.normal)) @ cand.pose
    return hull_local.transformed(pose)


def _contains_any(hull: TriMesh, points: np.ndarray, tol: float = 1e-9) -> bool:
    """Whether any point lies inside the convex mesh ``hull``."""
    lo, hi = hull.bounds()
    box = np.all((points >= lo - tol) & (points <= hi + tol), axis=1)
    if not np.any(box):
        return False
    try:
        eq = ConvexHull(hull.vertices).equations
    except QhullError:  # flat hull: nothing can be strictly inside
        return False
    inside = np.all(points[box] @ eq[:, :3].T + eq[:, 3] <= tol, axis=1)
    return bool(np.any(inside))


def placement_collides(hull: TriMesh, region: TargetRegion, margin: float) -> bool:
    """Whether an already posed object hull hits the environment or another object."""
    for other in (region.obstacles, *region.objects):
        if other.is_empty:
            continue
        if meshes_collide(hull, other, margin) or _contains_any(hull, other.vertices):
            return True
    return False


def filter_colliding_placements(
    cands: Sequence[PlacementCandidate],
    hull_local: TriMesh,
    region: TargetRegion,
    margin: float = 0.0,
    allowance: float = SUPPORT_ALLOWANCE,
) -> List[PlacementCandidate]:
    """Keep candidates whose object hull (object frame) is clear of obstacles.

    The hull is raised by ``allowance`` along the support normal before the
    test so that resting contact, or a slight sink into the support, does
    not count as a collision.
    """
    if margin < 0:
        raise ValueError("margin must be non-negative")
    return [c for c in cands if not placement_collides(posed_hull(hull_local, c, allowance), region, margin)]


def nearest_object_clearance(hull: TriMesh, region: TargetRegion) -> float:
    """Distance from a posed hull to the closest other object; ``inf`` if there is none."""
    others = [o for o in region.objects if not o.is_empty]
    if not others:
        return float("inf")
    return min(mesh_min_distance(hull, o) for o in others)


def packing_heuristic(d, params: PackingHeuristicParams = PackingHeuristicParams()):
    """Clearance heuristic: dense mode favors snug spots, sparse mode roomy ones.

    Clearances below the collision margin are rejected with 0.
    """
    d = np.asarray(d, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        if params.mode == "dense":
            val = np.where(d <= params.tau, 1.0, np.exp(-params.k * (d - params.tau)))
        else:
            val = np.where(d >= params.tau, 1.0, np.exp(-params.k * (params.tau - d)))
    val = np.where(d < params.margin, 0.0, val)
    return float(val) if val.ndim == 0 else val
