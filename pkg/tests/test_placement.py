import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from placeability.errors import EmptyGeometry
from placeability.geometry import PointCloud, RigidPose, TriMesh, box_mesh, rot_x, rot_y, rot_z
from placeability.oracle import uniform_box
from placeability.placement import (
    ORIENTATION_LABELS,
    ObjectModel,
    PackingHeuristicParams,
    PlacementCandidate,
    TargetRegion,
    expand_orientations,
    filter_colliding_placements,
    nearest_object_clearance,
    orientation_set,
    packing_heuristic,
    posed_hull,
    rest_on_surface,
    sample_placement_poses,
)
from placeability.scenes import plane_mesh, slab, table_region


@pytest.fixture(scope="module")
def obj():
    cloud = uniform_box((0.06, 0.06, 0.12)).dense_cloud(1500, seed=0)
    return ObjectModel.from_cloud(PointCloud(cloud.points + [-0.4, 0, 0], cloud.normals))


def test_object_frame(obj):
    np.testing.assert_allclose(obj.pose.translation, obj.cloud.points.mean(axis=0))
    np.testing.assert_allclose(obj.local_cloud().points.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(obj.cloud_at(obj.pose), obj.cloud.points, atol=1e-12)
    with pytest.raises(EmptyGeometry):
        ObjectModel.from_cloud(PointCloud(np.zeros((0, 3))))


def test_orientation_set():
    m = RigidPose(rot_z(0.3), [1, 2, 3])
    poses = orientation_set(m)
    assert len(poses) == len(ORIENTATION_LABELS) == 6
    np.testing.assert_allclose(poses[0].matrix, m.matrix)
    np.testing.assert_allclose(poses[1].rotation, rot_z(0.3) @ rot_x(np.pi / 2), atol=1e-12)
    np.testing.assert_allclose(poses[4].rotation, rot_z(0.3) @ rot_y(-np.pi / 2), atol=1e-12)
    np.testing.assert_allclose(poses[5].rotation, rot_z(0.3) @ rot_x(np.pi), atol=1e-12)
    R = np.stack([p.rotation for p in poses])
    assert len({tuple(np.round(r, 9).ravel()) for r in R}) == 6


def test_label_validation():
    with pytest.raises(ValueError):
        PlacementCandidate(RigidPose.identity(), label="sideways")
    c = PlacementCandidate(RigidPose.identity()).with_scores(f_st=0.5)
    assert c.scores == {"f_st": 0.5}


@given(st.floats(-np.pi, np.pi), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_rest_on_surface_touches_plane(angle, tilt_x, tilt_y):
    local = uniform_box().dense_cloud(500, seed=1).points - [0, 0, 0.1]
    n = rot_y(tilt_y) @ rot_x(tilt_x) @ [0, 0, 1]
    p = np.array([0.3, -0.2, 0.1])
    pose = rest_on_surface(local, rot_z(angle), p, n)
    heights = (pose.apply(local) - p) @ n
    assert heights.min() == pytest.approx(0.0, abs=1e-12)


def test_sampled_poses(obj):
    region = table_region(0.1, -0.3, 0.7, 0.3)
    cands = sample_placement_poses(region, obj, 10, seed=2, orientations=True)
    assert len(cands) == 60
    assert [c.label for c in cands[:6]] == list(ORIENTATION_LABELS)
    for c in cands:
        z = obj.cloud_at(c.pose)[:, 2]
        assert z.min() == pytest.approx(0.0, abs=1e-12)
        assert 0.1 <= c.surface_point[0] <= 0.7 and -0.3 <= c.surface_point[1] <= 0.3
    # upright and flipped keep the box 12 cm tall; quarter turns lay it down
    heights = {c.label: np.ptp(obj.cloud_at(c.pose)[:, 2]) for c in cands[:6]}
    assert heights["observed"] == pytest.approx(0.12, abs=2e-3)
    assert heights["flip"] == pytest.approx(0.12, abs=2e-3)
    assert heights["+pitch90"] == pytest.approx(0.06, abs=2e-3)
    again = sample_placement_poses(region, obj, 10, seed=2, orientations=True)
    assert all(a.pose.allclose(b.pose, 0) for a, b in zip(cands, again))


def test_expand_orientations_matches_sampler(obj):
    region = table_region(0.1, -0.3, 0.7, 0.3)
    plain = sample_placement_poses(region, obj, 3, seed=5)
    full = sample_placement_poses(region, obj, 3, seed=5, orientations=True)
    expanded = [c for p in plain for c in expand_orientations(p, obj)]
    assert all(a.pose.allclose(b.pose, 1e-12) and a.label == b.label for a, b in zip(expanded, full))


def test_tilted_support_normal(obj):
    ramp = plane_mesh(-0.2, -0.2, 0.2, 0.2).transformed(RigidPose(rot_y(0.3), [0, 0, 0]))
    region = TargetRegion(ramp)
    for c in sample_placement_poses(region, obj, 5, seed=0):
        np.testing.assert_allclose(c.normal, rot_y(0.3)[:, 2], atol=1e-12)
        assert ((obj.cloud_at(c.pose) - c.surface_point) @ c.normal).min() == pytest.approx(0, abs=1e-12)


def test_collision_filter(obj):
    neighbor = slab(0.3, -0.05, 0.4, 0.05, 0.0, 0.1)
    region = table_region(0.0, -0.5, 1.0, 0.5, [neighbor])
    hull = obj.local_hull()
    local = obj.local_cloud().points
    on_neighbor = PlacementCandidate(rest_on_surface(local, np.eye(3), [0.35, 0, 0], [0, 0, 1]))
    free = PlacementCandidate(rest_on_surface(local, np.eye(3), [0.7, 0, 0], [0, 0, 1]))
    kept = filter_colliding_placements([on_neighbor, free], hull, region)
    assert kept == [free]
    # without the allowance resting contact counts as a collision
    assert filter_colliding_placements([free], hull, region, allowance=0.0) == []
    with pytest.raises(ValueError):
        filter_colliding_placements([free], hull, region, margin=-1)


def test_small_obstacle_inside_object_hull(obj):
    pebble = box_mesh([0.005] * 3, center=[0.5, 0, 0.05])
    region = table_region(0.0, -0.5, 1.0, 0.5, [pebble])
    c = PlacementCandidate(rest_on_surface(obj.local_cloud().points, np.eye(3), [0.5, 0, 0], [0, 0, 1]))
    assert filter_colliding_placements([c], obj.local_hull(), region) == []


def test_clearance_matches_box_gap():
    hull = box_mesh([0.06, 0.06, 0.12])
    other = box_mesh([0.1, 0.1, 0.1], center=[0.2, 0, 0.05])
    region = TargetRegion(plane_mesh(-1, -1, 1, 1), objects=(other,))
    c = PlacementCandidate(RigidPose.from_translation([0, 0, 0.06]))
    d = nearest_object_clearance(posed_hull(hull, c), region)
    assert d == pytest.approx(0.2 - 0.05 - 0.03)
    assert nearest_object_clearance(hull, TargetRegion(plane_mesh(-1, -1, 1, 1))) == math.inf


def test_footprint_merges_coplanar_faces():
    region = table_region(0.1, -0.3, 0.7, 0.3)
    assert region.footprint(0).area == pytest.approx(0.36)
    with pytest.raises(EmptyGeometry):
        TargetRegion(TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int)))


taus = st.floats(0.01, 0.3)
kk = st.floats(1.0, 500.0)


@given(taus, kk, st.floats(0, 1))
def test_heuristic_boundaries(tau, k, mfrac):
    margin = mfrac * tau * 0.99
    dense = PackingHeuristicParams(tau, k, margin, "dense")
    sparse = PackingHeuristicParams(tau, k, margin, "sparse")
    assert packing_heuristic(tau, dense) == 1.0
    assert packing_heuristic(tau + math.log(2) / k, dense) == pytest.approx(0.5, abs=1e-9)
    assert packing_heuristic(tau, sparse) == 1.0
    if tau - math.log(2) / k >= margin:
        assert packing_heuristic(tau - math.log(2) / k, sparse) == pytest.approx(0.5, abs=1e-9)
    if margin > 0:
        for p in (dense, sparse):
            assert packing_heuristic(margin * 0.999, p) == 0.0


@given(taus, kk)
def test_heuristic_monotone_and_bounded(tau, k):
    d = np.linspace(0, 1, 200)
    dense = packing_heuristic(d, PackingHeuristicParams(tau, k, 0.0, "dense"))
    sparse = packing_heuristic(d, PackingHeuristicParams(tau, k, 0.0, "sparse"))
    assert np.all(np.diff(dense) <= 0) and np.all(np.diff(sparse) >= 0)
    assert np.all((dense >= 0) & (dense <= 1)) and np.all((sparse >= 0) & (sparse <= 1))


def test_heuristic_without_neighbors():
    assert packing_heuristic(math.inf, PackingHeuristicParams(mode="dense")) == 0.0
    assert packing_heuristic(math.inf, PackingHeuristicParams(mode="sparse")) == 1.0


@pytest.mark.parametrize("kw", [dict(mode="medium"), dict(k=0), dict(tau=0.001, margin=0.005)])
def test_heuristic_param_validation(kw):
    with pytest.raises(ValueError):
        PackingHeuristicParams(**kw)
