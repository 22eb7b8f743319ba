"""How much of the object must be seen?

A single camera sees the near side of an object.  The missing far side
biases the center-of-mass estimate toward the camera, which shifts the
predicted tipping point.  Adding viewpoints fills in the cloud and the
prediction converges on the true threshold.
"""

import numpy as np

from placeability.oracle import cylinder, edge_sweep, synthesize_partial_cloud, uniform_box, viewpoints_around


def threshold_error(obj, views, seed):
    vps = viewpoints_around(obj.com, views, seed)
    cloud, covered = synthesize_partial_cloud(obj.mesh, vps, noise=0.0005, seed=seed, n=4000)
    res = edge_sweep(obj, cloud, steps=51, seed=seed)
    err = res.error if np.isfinite(res.estimated_threshold) else 1.0
    return err, covered


if __name__ == "__main__":
    seeds = range(8)
    for obj in (uniform_box(), cylinder(segments=32)):
        print(f"\n{obj.label}")
        print("  views  covered  median |error|")
        for views in (1, 2, 3, 5):
            runs = [threshold_error(obj, views, s) for s in seeds]
            err = np.median([r[0] for r in runs])
            cov = np.mean([r[1] for r in runs])
            print(f"  {views:5d}  {cov:7.2f}  {err:14.3f}")
