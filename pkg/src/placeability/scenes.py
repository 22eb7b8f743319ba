"""Bundled demo scenes.

``tabletop`` moves a box from one table to another that already holds two
objects.  ``shelf`` moves a tall box into a shelf compartment whose ceiling
is too low for an upright object grasped from above; it comes with a
top-down and a side grasp set so the grasp-dependent choice of placement
orientation can be reproduced.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Union

import numpy as np

from .geometry import PointCloud, TriMesh, box_mesh, merge_meshes
from .grasp import GraspCandidate, make_grasp
from .io import load_mesh, load_point_cloud, write_mesh, write_point_cloud
from .oracle import uniform_box
from .pipeline import SceneDescription
from .placement import ObjectModel, TargetRegion

SOURCE_CENTER = np.array([-0.4, 0.0, 0.0])
SLAB = 0.02


def plane_mesh(xmin: float, ymin: float, xmax: float, ymax: float, z: float = 0.0) -> TriMesh:
    """Upward-facing rectangle made of two triangles."""
    v = [[xmin, ymin, z], [xmax, ymin, z], [xmax, ymax, z], [xmin, ymax, z]]
    return TriMesh(np.array(v, dtype=float), np.array([[0, 1, 2], [0, 2, 3]]))


def slab(xmin, ymin, xmax, ymax, z0, z1) -> TriMesh:
    return box_mesh([xmax - xmin, ymax - ymin, z1 - z0], center=[(xmin + xmax) / 2, (ymin + ymax) / 2, (z0 + z1) / 2])


def table_region(xmin, ymin, xmax, ymax, objects=()) -> TargetRegion:
    return TargetRegion(plane_mesh(xmin, ymin, xmax, ymax), slab(xmin, ymin, xmax, ymax, -SLAB, 0.0), tuple(objects))


def box_object(size, center_xy=SOURCE_CENTER[:2], points: int = 3000, seed: int = 0) -> ObjectModel:
    """A full-coverage scan of a box standing on z = 0."""
    syn = uniform_box(size)
    cloud = syn.dense_cloud(points, seed=seed)
    shift = np.array([center_xy[0], center_xy[1], 0.0])
    return ObjectModel.from_cloud(PointCloud(cloud.points + shift, cloud.normals))


def tabletop_scene(seed: int = 0) -> SceneDescription:
    obj = box_object((0.06, 0.06, 0.12), seed=seed)
    neighbors = [slab(0.26, 0.10, 0.34, 0.18, 0.0, 0.08), slab(0.50, -0.16, 0.58, -0.08, 0.0, 0.10)]
    target = table_region(0.1, -0.3, 0.7, 0.3, neighbors)
    source = table_region(-0.7, -0.3, -0.1, 0.3)
    return SceneDescription(target, obj, source, "tabletop")


SHELF_OBJECT = (0.06, 0.10, 0.20)
SHELF_CEILING = 0.24


def shelf_scene(seed: int = 0) -> SceneDescription:
    """A 0.7 x 0.4 m compartment, open toward -y, with its ceiling at 0.24 m."""
    obj = box_object(SHELF_OBJECT, seed=seed)
    x0, x1, y0, y1 = 0.1, 0.8, -0.2, 0.2
    top = SHELF_CEILING
    t = SLAB
    parts = [
        slab(x0 - t, y0, x1 + t, y1 + t, -t, 0.0),  # floor
        slab(x0 - t, y0, x1 + t, y1 + t, top, top + t),  # ceiling
        slab(x0 - t, y1, x1 + t, y1 + t, 0.0, top),  # back wall
        slab(x0 - t, y0, x0, y1, 0.0, top),  # left wall
        slab(x1, y0, x1 + t, y1, 0.0, top),  # right wall
    ]
    target = TargetRegion(plane_mesh(x0, y0, x1, y1), merge_meshes(parts))
    source = table_region(-0.7, -0.3, -0.1, 0.3)
    return SceneDescription(target, obj, source, "shelf")


def shelf_top_grasps(scene: SceneDescription) -> List[GraspCandidate]:
    """Grasps from above, 2 cm below the object's top, closing across its narrow side."""
    c = scene.obj.cloud.points
    center = 0.5 * (c.min(axis=0) + c.max(axis=0))
    top = c[:, 2].max()
    width = SHELF_OBJECT[0] + 0.01
    return [
        make_grasp([center[0], center[1] + dy, top - 0.02], [1, 0, 0], [0, 0, -1], width, q)
        for dy, q in ((0.0, 1.0), (0.02, 0.95), (-0.02, 0.95))
    ]


def shelf_side_grasps(scene: SceneDescription) -> List[GraspCandidate]:
    """Horizontal grasps at mid-height, entering 2 cm past the broad face."""
    c = scene.obj.cloud.points
    lo, hi = c.min(axis=0), c.max(axis=0)
    center = 0.5 * (lo + hi)
    width = SHELF_OBJECT[0] + 0.01
    out = []
    for sign in (+1, -1):
        y = (lo[1] + 0.02) if sign > 0 else (hi[1] - 0.02)
        for z, q in ((center[2], 1.0), (center[2] + 0.02, 0.95)):
            out.append(make_grasp([center[0], y, z], [1, 0, 0], [0, sign, 0], width, q))
    return out


SCENES = {"tabletop": tabletop_scene, "shelf": shelf_scene}
GRASP_SETS = {"top": shelf_top_grasps, "side": shelf_side_grasps}


def build_scene(name: str, seed: int = 0) -> SceneDescription:
    try:
        return SCENES[name](seed)
    except KeyError:
        raise ValueError(f"unknown scene {name!r}; choose from {sorted(SCENES)}") from None


# ---------------------------------------------------------------------------
# Scene directories
# ---------------------------------------------------------------------------


def save_scene(scene: SceneDescription, directory: Union[str, Path]) -> Path:
    """Write the scene as ``object.ply`` plus OBJ meshes for each region."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_point_cloud(d / "object.ply", scene.obj.cloud)
    for prefix, region in (("target", scene.target), ("source", scene.source)):
        if region is None:
            continue
        write_mesh(d / f"{prefix}_support.obj", region.support)
        if region.environment is not None:
            write_mesh(d / f"{prefix}_env.obj", region.environment)
        for i, m in enumerate(region.objects):
            write_mesh(d / f"{prefix}_object_{i}.obj", m)
    return d


def _load_region(d: Path, prefix: str):
    support = d / f"{prefix}_support.obj"
    if not support.exists():
        return None
    env = d / f"{prefix}_env.obj"
    objects = sorted(d.glob(f"{prefix}_object_*.obj"), key=lambda p: int(p.stem.rsplit("_", 1)[1]))
    return TargetRegion(load_mesh(support), load_mesh(env) if env.exists() else None,
                        tuple(load_mesh(p) for p in objects))


def load_scene(directory: Union[str, Path]) -> SceneDescription:
    d = Path(directory)
    target = _load_region(d, "target")
    if target is None:
        raise FileNotFoundError(f"{d}: missing target_support.obj")
    obj = ObjectModel.from_cloud(load_point_cloud(d / "object.ply"))
    return SceneDescription(target, obj, _load_region(d, "source"), d.name)
