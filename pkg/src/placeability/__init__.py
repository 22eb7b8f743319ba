"""Placement reasoning for robotic pick-and-place from partial point clouds.

Estimate how stable an object will be in a candidate placement, score
placements against the grasps that could carry the object there, and rank
grasp-placement pairs jointly.
"""

from .config import RunConfig
from .distance import mesh_min_distance, meshes_collide
from .errors import (
    ConfigError,
    DegenerateHull,
    DegenerateSupport,
    EmptyGeometry,
    GeometryError,
    InsufficientPoints,
    MissingNormals,
    NoFeasiblePair,
    ParseError,
    PlaceabilityError,
    ShapeError,
)
from .geometry import PointCloud, Polygon2D, RigidPose, TriMesh
from .grasp import GraspCandidate, GripperModel, WorkspaceBox, gripper_collides, sample_antipodal_grasps
from .io import load_grasps, load_mesh, load_point_cloud, write_grasps, write_mesh, write_point_cloud
from .pipeline import ReasoningParams, ReasoningReport, SceneDescription, run_unified_reasoning
from .placement import (
    ObjectModel,
    PackingHeuristicParams,
    PlacementCandidate,
    TargetRegion,
    orientation_set,
    packing_heuristic,
    sample_placement_poses,
)
from .scoring import (
    AltitudeParams,
    CollisionMatrix,
    UnifiedWeights,
    altitude_weight,
    collision_matrix,
    normalize_scores,
    select_best_pair,
    unified_scores,
)
from .stability import StabilityParams, StabilityResult, evaluate_placement_stability, stability_score

__all__ = [
    "AltitudeParams",
    "CollisionMatrix",
    "ConfigError",
    "DegenerateHull",
    "DegenerateSupport",
    "EmptyGeometry",
    "GeometryError",
    "GraspCandidate",
    "GripperModel",
    "InsufficientPoints",
    "MissingNormals",
    "NoFeasiblePair",
    "ObjectModel",
    "PackingHeuristicParams",
    "ParseError",
    "PlaceabilityError",
    "PlacementCandidate",
    "PointCloud",
    "Polygon2D",
    "ReasoningParams",
    "ReasoningReport",
    "RigidPose",
    "RunConfig",
    "SceneDescription",
    "ShapeError",
    "StabilityParams",
    "StabilityResult",
    "TargetRegion",
    "TriMesh",
    "UnifiedWeights",
    "WorkspaceBox",
    "altitude_weight",
    "collision_matrix",
    "evaluate_placement_stability",
    "gripper_collides",
    "load_grasps",
    "load_mesh",
    "load_point_cloud",
    "mesh_min_distance",
    "meshes_collide",
    "normalize_scores",
    "orientation_set",
    "packing_heuristic",
    "run_unified_reasoning",
    "sample_antipodal_grasps",
    "sample_placement_poses",
    "select_best_pair",
    "stability_score",
    "unified_scores",
    "write_grasps",
    "write_mesh",
    "write_point_cloud",
]
__version__ = "0.1.0"
