"""Pick a box from one table and put it on another that already holds two objects.

The pipeline samples grasps on the observed cloud, samples resting poses on
the target table in six orientations, scores each pose for stability and
each grasp for how well it survives the move, and ranks the pairs jointly.
"""

from placeability.pipeline import ReasoningParams, run_unified_reasoning
from placeability.placement import PackingHeuristicParams
from placeability.scenes import build_scene


def summarize(title, report, top=5):
    d = report.diagnostics
    print(f"\n{title}")
    print(f"  {d['grasps_in']} grasps sampled, {d['grasps_eliminated_at_pick']} hit the source table")
    print(f"  {d['placements_sampled']} placements sampled, {d['placements_eliminated_collision']} collide, "
          f"{d['placements_unstable']} unstable")
    print(f"  {d['pairs_feasible']} of {d['pairs']} pairs have a positive score")
    print("  rank  grasp  place  label       score   f_st   f_alt  f_h")
    for r in range(min(top, len(report.ranked))):
        b = report.breakdown(r)
        print(f"  {r:4d}  {b['grasp']:5d}  {b['placement']:5d}  {b['label']:<10}  {b['score']:.3f}  "
              f"{b['f_st']:.3f}  {b['f_alt']:.3f}  {b['f_h']:.3f}")


if __name__ == "__main__":
    scene = build_scene("tabletop")
    summarize("no packing preference", run_unified_reasoning(scene, n_grasps=100, n_placements=40, seed=0))
    dense = ReasoningParams(heuristic=PackingHeuristicParams(tau=0.05, k=50, margin=0.005, mode="dense"))
    summarize("prefer spots next to other objects",
              run_unified_reasoning(scene, params=dense, n_grasps=100, n_placements=40, seed=0))
