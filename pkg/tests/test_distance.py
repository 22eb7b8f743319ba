import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation

from placeability.distance import (
    mesh_min_distance,
    meshes_collide,
    point_segment_distance,
    point_triangle_distance,
    segment_segment_distance,
    tri_tri_distance,
)
from placeability.errors import EmptyGeometry
from placeability.geometry import RigidPose, TriMesh, box_mesh, convex_hull_mesh


def qp_tri_tri(A, B):
    """Distance between two triangles as a convex QP over barycentric coordinates."""

    def point(T, u, v):
        return T[0] + u * (T[1] - T[0]) + v * (T[2] - T[0])

    def f(x):
        d = point(A, x[0], x[1]) - point(B, x[2], x[3])
        return d @ d

    cons = [{"type": "ineq", "fun": lambda x, i=i: x[i]} for i in range(4)]
    cons += [{"type": "ineq", "fun": lambda x: 1 - x[0] - x[1]}, {"type": "ineq", "fun": lambda x: 1 - x[2] - x[3]}]
    best = np.inf
    for x0 in ([1 / 3] * 4, [0, 0, 0, 0], [1, 0, 0, 1], [0, 1, 1, 0]):
        r = minimize(f, x0, constraints=cons, method="SLSQP", options={"ftol": 1e-14, "maxiter": 500})
        best = min(best, r.fun)
    return np.sqrt(max(best, 0.0))


def test_point_segment_closed_form():
    a, b = np.array([0.0, 0, 0]), np.array([1.0, 0, 0])
    assert point_segment_distance(np.array([0.5, 2, 0]), a, b) == pytest.approx(2)
    assert point_segment_distance(np.array([-3.0, 4, 0]), a, b) == pytest.approx(5)


def test_segment_segment_parallel_and_skew():
    d = segment_segment_distance(np.array([0.0, 0, 0]), np.array([1.0, 0, 0]),
                                 np.array([0.0, 1, 0]), np.array([1.0, 1, 0]))
    assert d == pytest.approx(1)
    d = segment_segment_distance(np.array([0.0, 0, 0]), np.array([1.0, 0, 0]),
                                 np.array([0.5, -1, 2]), np.array([0.5, 1, 2]))
    assert d == pytest.approx(2)


def test_point_triangle_regions():
    T = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
    assert point_triangle_distance(np.array([0.2, 0.2, 3.0]), T) == pytest.approx(3)
    assert point_triangle_distance(np.array([-1.0, -1.0, 0.0]), T) == pytest.approx(np.sqrt(2))


@given(st.integers(0, 100_000))
def test_tri_tri_matches_qp(seed):
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1, 1, (3, 3))
    B = rng.uniform(-1, 1, (3, 3)) + rng.uniform(-1.5, 1.5, 3)
    assert tri_tri_distance(A, B) == pytest.approx(qp_tri_tri(A, B), abs=1e-6)


def test_tri_tri_crossing_is_zero():
    A = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
    B = np.array([[0.2, 0.2, -1], [0.2, 0.2, 1], [0.3, 0.9, 0.5]])
    assert tri_tri_distance(A, B) == 0.0


def aabb_gap(lo1, hi1, lo2, hi2):
    gap = np.maximum(0, np.maximum(lo2 - hi1, lo1 - hi2))
    return float(np.linalg.norm(gap))


@given(st.tuples(*[st.floats(-0.5, 0.5)] * 3), st.tuples(*[st.floats(0.05, 0.4)] * 3))
def test_box_distance_closed_form(offset, size):
    a = box_mesh([0.2, 0.2, 0.2])
    b = box_mesh(size, center=offset)
    c, h = np.asarray(offset), np.asarray(size) / 2
    # nested boxes have disjoint surfaces; the gap formula does not apply
    inner = np.all(c - h > -0.1) and np.all(c + h < 0.1)
    outer = np.all(c - h < -0.1) and np.all(c + h > 0.1)
    assume(not (inner or outer))
    expected = aabb_gap(-0.1 * np.ones(3), 0.1 * np.ones(3), c - h, c + h)
    assert mesh_min_distance(a, b) == pytest.approx(expected, abs=1e-9)
    assert meshes_collide(a, b, 0.0) == (expected == 0.0)


@given(st.integers(0, 10_000))
def test_accelerated_equals_brute(seed):
    rng = np.random.default_rng(seed)
    a = convex_hull_mesh(rng.normal(size=(30, 3)) * 0.1)
    pose = RigidPose(Rotation.random(random_state=seed).as_matrix(), rng.uniform(-0.4, 0.4, 3))
    b = convex_hull_mesh(rng.normal(size=(25, 3)) * 0.1).transformed(pose)
    d = mesh_min_distance(a, b)
    assert d == mesh_min_distance(a, b, method="brute")
    for margin in (0.0, d * 0.999, d * 1.001 + 1e-12):
        assert meshes_collide(a, b, margin) == (d <= margin)


def test_distance_symmetric():
    a = box_mesh([1, 1, 1])
    b = box_mesh([1, 1, 1], center=[3, 0.2, 0.1])
    assert mesh_min_distance(a, b) == mesh_min_distance(b, a) == pytest.approx(2.0)


def test_containment_is_not_collision_of_surfaces():
    # a small box floating inside a big one: surfaces are apart
    big = box_mesh([1, 1, 1])
    small = box_mesh([0.1, 0.1, 0.1])
    assert mesh_min_distance(big, small) == pytest.approx(0.45)


def test_errors():
    a = box_mesh([1, 1, 1])
    empty = TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int))
    with pytest.raises(EmptyGeometry):
        mesh_min_distance(a, empty)
    with pytest.raises(ValueError):
        meshes_collide(a, a, -1.0)
