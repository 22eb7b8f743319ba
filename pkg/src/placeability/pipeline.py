"""End-to-end grasp-place reasoning for one observed object.

Stages: grasp acquisition, placement sampling with the six orientations,
object collision filtering, per-candidate scoring (stability, graspability
at the placement, altitude clearance, packing heuristic), normalization, the
gripper collision matrix, the unified matrix and the ranked pair list.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .errors import NoFeasiblePair
from .geometry import RigidPose, merge_meshes
from .grasp import GraspCandidate, GripperModel, WorkspaceBox, gripper_collisions, sample_antipodal_grasps
from .placement import (
    SUPPORT_ALLOWANCE,
    ObjectModel,
    PackingHeuristicParams,
    PlacementCandidate,
    TargetRegion,
    filter_colliding_placements,
    nearest_object_clearance,
    packing_heuristic,
    posed_hull,
    sample_placement_poses,
)
from .scoring import (
    AltitudeParams,
    CollisionMatrix,
    RankedPairs,
    UnifiedWeights,
    altitude_weight,
    collision_matrix,
    moved_grasp_poses,
    normalize_scores,
    select_best_pair,
    unified_scores,
)
from .stability import StabilityParams, evaluate_placement_stability

STAGES = ("ingestion", "grasps", "placements", "placeability", "collision", "reasoning")


@dataclass(frozen=True, eq=False)
class SceneDescription:
    """Source region the object is picked from, target region and the object itself."""

    target: TargetRegion
    obj: ObjectModel
    source: Optional[TargetRegion] = None
    name: str = "scene"


@dataclass(frozen=True)
class ReasoningParams:
    stability: StabilityParams = StabilityParams()
    altitude: AltitudeParams = AltitudeParams()
    heuristic: Optional[PackingHeuristicParams] = None
    weights: UnifiedWeights = UnifiedWeights()
    gripper: GripperModel = GripperModel()
    reachability: Callable[[RigidPose], bool] = WorkspaceBox()
    collision_margin: float = 0.0
    placement_margin: float = 0.0
    support_allowance: float = SUPPORT_ALLOWANCE

    def echo(self) -> dict:
        out = {}
        for name in ("stability", "altitude", "heuristic", "weights", "gripper"):
            rec = getattr(self, name)
            out[name] = None if rec is None else asdict(rec)
        out["reachability"] = getattr(self.reachability, "__name__", None) or repr(self.reachability)
        for name in ("collision_margin", "placement_margin", "support_allowance"):
            out[name] = getattr(self, name)
        return out


@dataclass(eq=False)
class ReasoningReport:
    """Everything a run produced.

    Component arrays are indexed ``[grasp, placement]`` (or ``[placement]``)
    over the grasps and collision-free placements that entered scoring.
    """

    ranked: RankedPairs
    grasps: List[GraspCandidate]
    placements: List[PlacementCandidate]
    f_st: np.ndarray
    f_h: np.ndarray
    f_alt: np.ndarray
    f_pcg: np.ndarray
    placeability: np.ndarray
    reach: np.ndarray
    collision: CollisionMatrix
    v_g: np.ndarray
    v_p: np.ndarray
    scores: np.ndarray
    timing: Dict[str, float]
    diagnostics: Dict[str, int]
    params: dict
    seed: int
    object_pose: RigidPose

    @property
    def best(self):
        return self.ranked[0]

    def breakdown(self, rank: int) -> dict:
        k, p, s = self.ranked[rank]
        return {
            "rank": rank,
            "grasp": k,
            "placement": p,
            "label": self.placements[p].label,
            "score": s,
            "v_g": float(self.v_g[k]),
            "v_p": float(self.v_p[k, p]),
            "collision_free": int(self.collision.entries[k, p]),
            "reachable": int(self.reach[k, p]),
            "quality": self.grasps[k].quality,
            "f_pcg": float(self.f_pcg[k, p]),
            "f_st": float(self.f_st[p]),
            "f_alt": float(self.f_alt[k, p]),
            "f_h": float(self.f_h[p]),
            "placeability": float(self.placeability[k, p]),
            "placeability_max": float(self.placeability.max()),
        }

    def to_dict(self, top: int = 10, timing: bool = False, config: Optional[dict] = None) -> dict:
        rows = []
        for r in range(min(top, len(self.ranked))):
            row = self.breakdown(r)
            k, p = row["grasp"], row["placement"]
            row["placement_pose"] = self.placements[p].pose.matrix
            row["grasp_pose_at_placement"] = (
                self.placements[p].pose.matrix @ self.object_pose.inverse().matrix @ self.grasps[k].pose.matrix
            )
            rows.append(row)
        out = {
            "seed": self.seed,
            "config": config if config is not None else self.params,
            "counts": {"grasps": len(self.grasps), "placements": len(self.placements),
                       "ranked_pairs": len(self.ranked)},
            "diagnostics": self.diagnostics,
            "ranked": rows,
        }
        if timing:
            out["timing"] = self.timing
        return out

    def to_json(self, top: int = 10, timing: bool = False, config: Optional[dict] = None) -> str:
        return dumps(self.to_dict(top, timing, config))


def _round(obj):
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
        return float(format(x, ".9g"))
    return obj


def dumps(obj) -> str:
    """Deterministic JSON with every float rounded to nine significant digits."""
    return json.dumps(_round(obj), indent=2, sort_keys=True) + "\n"


class _Clock:
    def __init__(self):
        self.timing = {s: 0.0 for s in STAGES}
        self._t = time.perf_counter()

    def lap(self, stage):
        now = time.perf_counter()
        self.timing[stage] += now - self._t
        self._t = now


def _reach_matrix(pred, poses: np.ndarray) -> np.ndarray:
    """Reachability for a ``(K, P, 4, 4)`` stack of grasp poses."""
    batch = getattr(pred, "batch", None)
    if batch is not None:
        return batch(poses[..., :3, 3]).astype(float)
    flat = poses.reshape(-1, 4, 4)
    out = np.array([1.0 if pred(RigidPose.from_matrix(T)) else 0.0 for T in flat])
    return out.reshape(poses.shape[:2])


def run_unified_reasoning(
    scene: SceneDescription,
    grasps: Optional[Sequence[GraspCandidate]] = None,
    params: ReasoningParams = ReasoningParams(),
    n_grasps: int = 100,
    n_placements: int = 40,
    seed: int = 0,
) -> ReasoningReport:
    """Rank grasp-placement pairs for ``scene``.

    ``grasps`` are expressed in the world at the object's observed pose; when
    omitted, ``n_grasps`` antipodal grasps are sampled from the object cloud.
    Each of the ``n_placements`` surface samples is expanded into six
    orientations.  Raises :class:`NoFeasiblePair` with per-stage elimination
    counts when nothing survives.
    """
    clock = _Clock()
    obj = scene.obj
    target = scene.target
    gripper_env = merge_meshes([target.obstacles, *target.objects])
    hull_local = obj.local_hull()
    diag: Dict[str, int] = {}
    clock.lap("ingestion")

    # grasps at the pick pose
    if grasps is None:
        grasps = sample_antipodal_grasps(obj.cloud, params.gripper, n_grasps, seed)
    grasps = list(grasps)
    diag["grasps_in"] = len(grasps)
    if grasps and scene.source is not None:
        source_env = merge_meshes([scene.source.obstacles, *scene.source.objects])
        hit = gripper_collisions(np.stack([g.pose.matrix for g in grasps]), [g.width for g in grasps],
                                 source_env, params.collision_margin, params.gripper)
        grasps = [g for g, h in zip(grasps, hit) if not h]
        diag["grasps_eliminated_at_pick"] = int(hit.sum())
    clock.lap("grasps")

    cands = sample_placement_poses(target, obj, n_placements, seed, orientations=True)
    diag["placements_sampled"] = len(cands)
    placements = filter_colliding_placements(cands, hull_local, target, params.placement_margin,
                                             params.support_allowance)
    diag["placements_eliminated_collision"] = len(cands) - len(placements)
    clock.lap("placements")
    if not grasps or not placements:
        diag.setdefault("grasps_eliminated_at_pick", 0)
        raise NoFeasiblePair("no grasps or no collision-free placements", diag)

    K, P = len(grasps), len(placements)
    f_st = np.empty(P)
    f_h = np.ones(P)
    min_z = np.empty(P)
    local = obj.local_cloud()
    for j, c in enumerate(placements):
        region = target.footprint(c.face) if c.face >= 0 else None
        res = evaluate_placement_stability(local, c.pose, params.stability, seed=seed + j,
                                           support_normal=c.normal, support_region=region)
        f_st[j] = res.score
        min_z[j] = obj.cloud_at(c.pose)[:, 2].min()
        if params.heuristic is not None:
            f_h[j] = packing_heuristic(nearest_object_clearance(posed_hull(hull_local, c), target), params.heuristic)
    diag["placements_unstable"] = int(np.sum(f_st == 0))
    diag["placements_rejected_heuristic"] = int(np.sum(f_h == 0))

    poses = moved_grasp_poses(grasps, placements, obj.pose)
    reach = _reach_matrix(params.reachability, poses)
    f_alt = altitude_weight(poses[..., 2, 3] - min_z[None, :], params.altitude)
    clock.lap("placeability")

    C = collision_matrix(grasps, placements, obj.pose, gripper_env, params.gripper, params.collision_margin, poses)
    clock.lap("collision")

    q = np.array([g.quality for g in grasps])
    f_pcg = q[:, None] * reach * C.entries
    q_gp = f_pcg * f_st[None, :] * f_alt * f_h[None, :]
    v_g = normalize_scores(q)
    v_p = normalize_scores(q_gp)
    pairs = K * P
    diag["pairs"] = pairs
    diag["pairs_eliminated_collision"] = int(pairs - C.entries.sum())
    diag["pairs_unreachable"] = int(pairs - reach.sum())
    if v_p.all_zero or v_g.all_zero:
        diag["pairs_feasible"] = 0
        raise NoFeasiblePair("every grasp-placement pair scored zero", diag)
    m = unified_scores(v_g.values, v_p.values, C, params.weights)
    try:
        ranked = select_best_pair(m)
    except NoFeasiblePair as exc:
        raise NoFeasiblePair(str(exc), {**diag, "pairs_feasible": 0}) from None
    diag["pairs_feasible"] = len(ranked)
    clock.lap("reasoning")

    report = ReasoningReport(
        ranked, grasps, placements, f_st, f_h, f_alt, f_pcg, q_gp, reach, C, v_g.values, v_p.values, m.scores,
        clock.timing, diag, params.echo(), seed, obj.pose,
    )
    return report
