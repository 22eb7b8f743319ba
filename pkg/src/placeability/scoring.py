"""Graspability, altitude clearance, combined placeability and the unified grasp-place matrix."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .errors import EmptyGeometry, NoFeasiblePair, ShapeError
from .geometry import PointCloud, RigidPose, TriMesh
from .grasp import GraspCandidate, GripperModel, grasp_matrices, gripper_collisions
from .placement import PlacementCandidate


@dataclass(frozen=True)
class AltitudeParams:
    """Logistic weight on the grasp's height above the object's lowest point."""

    z_start: float = 0.02
    z_end: float = 0.06
    k: float = 100.0
    w_min: float = 0.1
    w_max: float = 1.0

    def __post_init__(self):
        if not self.z_start < self.z_end:
            raise ValueError("require z_start < z_end")
        if not self.k > 0:
            raise ValueError("steepness k must be positive")
        if not 0.0 <= self.w_min <= self.w_max <= 1.0:
            raise ValueError("require 0 <= w_min <= w_max <= 1")

    @property
    def z_mid(self) -> float:
        return 0.5 * (self.z_start + self.z_end)


@dataclass(frozen=True)
class UnifiedWeights:
    grasp: float = 1.0
    place: float = 1.0

    def __post_init__(self):
        if not (self.grasp > 0 and self.place > 0):
            raise ValueError("weights must be strictly positive")


@dataclass(frozen=True, eq=False)
class CollisionMatrix:
    """Grasps x placements grid: 1 where the moved grasp is collision free."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.ndim != 2:
            raise ShapeError("collision matrix must be two-dimensional")
        if not np.all((e == 0) | (e == 1)):
            raise ValueError("collision matrix entries must be 0 or 1")
        e = e.astype(np.uint8)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True, eq=False)
class Normalized:
    values: np.ndarray
    all_zero: bool

    @cached_property
    def order(self) -> np.ndarray:
        """Flat indices sorting ``values`` in descending order (stable)."""
        return np.argsort(-self.values.reshape(-1), kind="stable")


@dataclass(frozen=True, eq=False)
class UnifiedScoreMatrix:
    scores: np.ndarray
    v_g: Normalized
    v_p: np.ndarray
    collision: CollisionMatrix
    weights: UnifiedWeights

    @property
    def shape(self):
        return self.scores.shape


class RankedPair(NamedTuple):
    grasp: int
    placement: int
    score: float


class RankedPairs:
    """Positive-score pairs of a ``(K, P)`` score matrix in descending order.

    The best pair comes from a single argmax.  The full ordering is only
    sorted when something past the best pair is requested; ties go to the
    lower grasp index, then the lower placement index.
    """

    def __init__(self, scores: np.ndarray):
        self._scores = scores
        self._flat = scores.reshape(-1)
        self._count = int(np.count_nonzero(self._flat > 0))

    def __len__(self) -> int:
        return self._count

    @cached_property
    def _order(self) -> np.ndarray:
        flat = self._flat
        pos = np.flatnonzero(flat > 0)
        order = pos[np.argsort(-flat[pos])]
        _break_ties(order, flat[order])
        return order

    @property
    def grasp(self) -> np.ndarray:
        return self._order // self._scores.shape[1]

    @property
    def placement(self) -> np.ndarray:
        return self._order % self._scores.shape[1]

    @property
    def score(self) -> np.ndarray:
        return self._flat[self._order]

    def _pair(self, flat_index) -> RankedPair:
        k, p = divmod(int(flat_index), self._scores.shape[1])
        return RankedPair(k, p, float(self._flat[flat_index]))

    def __getitem__(self, i) -> RankedPair:
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i in (0, -len(self)) and len(self):
            return self.best()
        return self._pair(self._order[i])

    def __iter__(self) -> Iterator[RankedPair]:
        for i in range(len(self)):
            yield self[i]

    def best(self) -> RankedPair:
        # argmax returns the first maximum, i.e. the lowest flat index among ties
        return self._pair(np.argmax(self._flat))


# ---------------------------------------------------------------------------
# Component scores
# ---------------------------------------------------------------------------


def pcg_score(q, rm, coll_free):
    """Graspability at the placement: quality gated by reachability and collision."""
    return q * rm * coll_free


def grasp_clearance(g_p: GraspCandidate, object_points) -> float:
    """Height of the grasp origin above the lowest point of the placed object."""
    pts = object_points.points if isinstance(object_points, PointCloud) else np.asarray(object_points, float)
    if pts.size == 0:
        raise EmptyGeometry("object cloud is empty")
    return float(g_p.pose.translation[2] - pts.reshape(-1, 3)[:, 2].min())


def altitude_weight(dz, params: AltitudeParams = AltitudeParams()):
    dz = np.asarray(dz, dtype=float)
    with np.errstate(over="ignore"):
        val = params.w_min + (params.w_max - params.w_min) / (1.0 + np.exp(-params.k * (dz - params.z_mid)))
    return float(val) if val.ndim == 0 else val


def placeability_score(f_pcg, f_st, f_alt, f_h=1.0):
    return f_pcg * f_st * f_alt * f_h


def normalize_scores(values) -> Normalized:
    """Divide by the maximum; an all-zero input stays zero and is flagged."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("cannot normalize an empty sequence")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValueError("scores must be finite and non-negative")
    top = v.max()
    out = np.zeros_like(v) if top == 0 else v / top
    return Normalized(out, bool(top == 0))


# ---------------------------------------------------------------------------
# Collision matrix and unified scores
# ---------------------------------------------------------------------------


def relative_transforms(placements: Sequence[PlacementCandidate], m_o: RigidPose) -> np.ndarray:
    """``(P, 4, 4)`` stack of ``m_p ∘ m_o⁻¹``."""
    inv = m_o.inverse().matrix
    return np.stack([p.pose.matrix @ inv for p in placements])


def moved_grasp_poses(grasps: Sequence[GraspCandidate], placements: Sequence[PlacementCandidate],
                      m_o: RigidPose) -> np.ndarray:
    """``(K, P, 4, 4)`` grasp poses carried to every placement."""
    G = grasp_matrices(grasps)
    T = relative_transforms(placements, m_o)
    return np.einsum("pij,kjl->kpil", T, G)


def collision_matrix(
    grasps: Sequence[GraspCandidate],
    placements: Sequence[PlacementCandidate],
    m_o: RigidPose,
    env: TriMesh,
    gripper: GripperModel = GripperModel(),
    margin: float = 0.0,
    poses: Optional[np.ndarray] = None,
) -> CollisionMatrix:
    """Entry ``[k, p]`` is 0 exactly when grasp ``k`` collides after moving to placement ``p``."""
    if not grasps or not placements:
        raise ValueError("need at least one grasp and one placement")
    if poses is None:
        poses = moved_grasp_poses(grasps, placements, m_o)
    K, P = len(grasps), len(placements)
    widths = np.repeat([g.width for g in grasps], P)
    hits = gripper_collisions(poses.reshape(-1, 4, 4), widths, env, margin, gripper)
    return CollisionMatrix((~hits).reshape(K, P).astype(np.uint8))


def _check_dims(v_g, v_p, C):
    v_g = np.asarray(v_g, dtype=float)
    v_p = np.asarray(v_p, dtype=float)
    C = C.entries if isinstance(C, CollisionMatrix) else np.asarray(C)
    if v_g.ndim != 1 or v_p.ndim != 2 or C.shape != v_p.shape or v_p.shape[0] != v_g.shape[0]:
        raise ShapeError(f"incompatible shapes: v_g {v_g.shape}, v_p {v_p.shape}, C {C.shape}")
    return v_g, v_p, C


def unified_scores(v_g, v_p, C, w: UnifiedWeights = UnifiedWeights()) -> UnifiedScoreMatrix:
    """Entrywise ``(w_g v_g[k]) * (w_p v_p[k, p]) * C[k, p]``."""
    v_g, v_p, Ce = _check_dims(v_g, v_p, C)
    scores = ((w.grasp * v_g)[:, None] * (w.place * v_p)) * Ce
    norm = Normalized(v_g, bool(not v_g.any()))
    return UnifiedScoreMatrix(scores, norm, v_p, C if isinstance(C, CollisionMatrix) else CollisionMatrix(Ce), w)


def unified_scores_reference(v_g, v_p, C, w: UnifiedWeights = UnifiedWeights()) -> np.ndarray:
    """Element-by-element evaluation of :func:`unified_scores`, for cross-checking."""
    v_g, v_p, Ce = _check_dims(v_g, v_p, C)
    K, P = v_p.shape
    out = np.empty((K, P))
    for k in range(K):
        a = w.grasp * float(v_g[k])
        for p in range(P):
            out[k, p] = (a * (w.place * float(v_p[k, p]))) * float(Ce[k, p])
    return out


def select_best_pair(m) -> RankedPairs:
    """All positive pairs by descending score; ties go to the lower grasp, then placement index."""
    s = m.scores if isinstance(m, UnifiedScoreMatrix) else np.asarray(m, dtype=float)
    if s.ndim != 2 or s.size == 0:
        raise ShapeError("score matrix must be a non-empty 2D array")
    ranked = RankedPairs(s)
    if len(ranked) == 0:
        raise NoFeasiblePair("every grasp-placement pair scored zero", {"pairs": int(s.size)})
    return ranked


def _break_ties(order: np.ndarray, sorted_scores: np.ndarray) -> None:
    """Reorder runs of equal scores by ascending flat (row-major) index, in place."""
    tie = np.flatnonzero(sorted_scores[1:] == sorted_scores[:-1])
    if len(tie) == 0:
        return
    members = np.unique(np.concatenate([tie, tie + 1]))
    v = sorted_scores[members]
    new_run = np.r_[True, (v[1:] != v[:-1]) | (np.diff(members) != 1)]
    run = np.cumsum(new_run)
    order[members] = order[members][np.lexsort((order[members], run))]
