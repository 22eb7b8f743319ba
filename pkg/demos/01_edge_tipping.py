"""Slide objects over a table edge and watch the stability score fall.

A uniform box should tip once half of its footprint hangs over the edge.
A block with its mass pushed toward one end tips early when that end leads
and late when the light end leads.  The score only sees a point cloud, so
the question is whether its 0.5 crossing lands on the true tipping point.
"""

import numpy as np

from placeability.oracle import edge_sweep, offset_mass_box, uniform_box


def bar(score, width=30):
    return "#" * int(round(score * width))


def show(title, obj, direction):
    cloud = obj.dense_cloud(4000, noise=0.0005, seed=0)
    res = edge_sweep(obj, cloud, steps=21, direction=direction, seed=0)
    print(f"\n{title}")
    for f, s in zip(res.abscissa[::2], res.scores[::2]):
        print(f"  overhang {f:4.2f}  {s:5.3f} {bar(s)}")
    print(f"  score crosses 0.5 at {res.estimated_threshold:.3f}; the CoM leaves the table at "
          f"{res.oracle_threshold:.3f}")


if __name__ == "__main__":
    np.set_printoptions(precision=3)
    show("uniform box, 0.1 x 0.1 x 0.2 m", uniform_box(), +1)
    heavy = offset_mass_box()
    show("offset-mass block, heavy end first", heavy, +1)
    show("offset-mass block, light end first", heavy, -1)
