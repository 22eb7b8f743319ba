"""The grasp decides the placement.

A 20 cm tall box goes into a shelf compartment with a 24 cm ceiling.
Grasped from above, the hand needs room over the object, so the box can
only go in lying down.  Grasped from the side, the box can stand upright.
"""

import numpy as np

from placeability.pipeline import run_unified_reasoning
from placeability.scenes import build_scene, shelf_side_grasps, shelf_top_grasps

if __name__ == "__main__":
    scene = build_scene("shelf")
    for name, grasps in (("top-down grasps", shelf_top_grasps(scene)), ("side grasps", shelf_side_grasps(scene))):
        report = run_unified_reasoning(scene, grasps, n_placements=40, seed=0)
        k, p, score = report.best
        cand = report.placements[p]
        height = np.ptp(scene.obj.cloud_at(cand.pose)[:, 2])
        labels = sorted({report.placements[q].label for q in report.ranked.placement[:20]})
        print(f"\n{name}")
        print(f"  winner: grasp {k}, placement {p} ({cand.label}), score {score:.3f}")
        print(f"  placed height {height:.3f} m at x={cand.surface_point[0]:.2f}, y={cand.surface_point[1]:.2f}")
        print(f"  orientations among the top 20 pairs: {', '.join(labels)}")
