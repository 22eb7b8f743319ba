import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from placeability.errors import DegenerateSupport, EmptyGeometry, InsufficientPoints
from placeability.geometry import PointCloud, RigidPose, rectangle, rot_x, rot_y, rot_z
from placeability.stability import (
    StabilityParams,
    evaluate_placement_stability,
    extract_support_contacts,
    fit_com_ellipsoid,
    inlier_fraction,
    sample_com_hypotheses,
    stability_score,
    support_polygon,
)

ks = st.floats(1.0, 50.0)
cs = st.floats(0.5001, 0.9999)


@given(ks, cs)
def test_score_endpoints(k, c):
    p = StabilityParams(k=k, c=c)
    assert abs(stability_score(0.5, p)) <= 1e-12
    assert abs(stability_score(1.0, p) - 1.0) <= 1e-12


@given(ks, cs, st.lists(st.floats(0, 1), min_size=2, max_size=20))
def test_score_monotone_and_bounded(k, c, ps):
    p = StabilityParams(k=k, c=c)
    ps = np.sort(ps)
    s = stability_score(ps, p)
    assert np.all((s >= 0) & (s <= 1))
    assert np.all(np.diff(s) >= -1e-15)


def test_score_clamps_below_half():
    assert stability_score(np.array([0.0, 0.2, 0.49])).tolist() == [0.0, 0.0, 0.0]


def test_score_half_crossing_near_c():
    # the normalized logistic passes 0.5 close to c for steep k
    p = StabilityParams(k=40, c=0.75)
    grid = np.linspace(0.5, 1, 50_001)
    cross = grid[np.argmax(stability_score(grid, p) >= 0.5)]
    assert abs(cross - 0.75) < 0.01


@pytest.mark.parametrize("kw", [dict(k=0), dict(c=0.5), dict(c=1.0), dict(epsilon=0), dict(samples=10),
                                dict(sigma_scale=0), dict(proximity=-1)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        StabilityParams(**kw)


def test_contacts_band():
    pts = np.array([[0, 0, 0.0], [1, 0, 0.002], [0, 1, 0.0031], [0, 0, 1.0]])
    c = extract_support_contacts(PointCloud(pts), 0.003)
    assert len(c) == 2
    with pytest.raises(EmptyGeometry):
        extract_support_contacts(np.zeros((0, 3)), 0.003)


def test_contacts_along_tilted_normal():
    n = rot_y(0.3)[:, 2]
    pts = np.array([[0, 0, 0.0], [1, 0, 0.0]])
    c = extract_support_contacts(pts, 0.003, n)
    # x grows uphill along the tilted normal's opposite direction
    assert len(c) == 1


def test_support_polygon_degenerate():
    with pytest.raises(DegenerateSupport):
        support_polygon([[0, 0, 0], [1, 0, 0]])
    with pytest.raises(DegenerateSupport):
        support_polygon([[0, 0, 0], [1, 0, 0], [2, 0, 0]])


def test_ellipsoid_fit_on_box(box_cloud):
    fit = fit_com_ellipsoid(box_cloud)
    np.testing.assert_allclose(fit.semi_axes, [0.05, 0.05, 0.1], atol=2e-3)
    np.testing.assert_allclose(fit.mean[:2], 0, atol=3e-3)
    with pytest.raises(InsufficientPoints):
        fit_com_ellipsoid(PointCloud(np.zeros((5, 3))))


def test_hypotheses_seeded(box_cloud):
    fit = fit_com_ellipsoid(box_cloud)
    a = sample_com_hypotheses(fit, 500, seed=7)
    b = sample_com_hypotheses(fit, 500, seed=7)
    c = sample_com_hypotheses(fit, 500, seed=8)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)
    std = (a.samples - fit.mean).std(axis=0)
    np.testing.assert_allclose(std, 0.05 * fit.semi_axes, rtol=0.15)


def test_inlier_fraction_exact():
    pts = np.array([[0.5, 0.5, 0], [2, 2, 0], [0.1, 0.9, 0], [-1, 0, 0]])
    assert inlier_fraction(pts, rectangle(0, 0, 1, 1)) == 0.5


def test_upright_box_is_stable(box_cloud):
    r = evaluate_placement_stability(box_cloud, RigidPose.identity())
    assert r.score == 1.0 and r.inlier_fraction == 1.0
    assert not r.degenerate


def test_box_balanced_on_its_edge_is_unstable(box_cloud):
    pose = RigidPose(rot_y(np.pi / 4), [0, 0, 0.3])
    assert evaluate_placement_stability(box_cloud, pose).score < 0.5


def test_knife_edge_contact_is_degenerate():
    rng = np.random.default_rng(0)
    edge = np.column_stack([rng.uniform(-0.05, 0.05, 50), np.zeros(50), np.zeros(50)])
    body = rng.uniform([-0.05, -0.05, 0.05], [0.05, 0.05, 0.2], (200, 3))
    r = evaluate_placement_stability(PointCloud(np.vstack([edge, body])), RigidPose.identity())
    assert r.degenerate and r.score == 0.0 and r.inlier_fraction == 0.0


@given(st.floats(-np.pi, np.pi), st.floats(-1, 1), st.floats(-1, 1))
def test_invariant_to_yaw_and_planar_shift(box_cloud, yaw, x, y):
    base = evaluate_placement_stability(box_cloud, RigidPose.identity(), seed=3)
    moved = evaluate_placement_stability(box_cloud, RigidPose(rot_z(yaw), [x, y, 0.5]), seed=3)
    assert moved.inlier_fraction == pytest.approx(base.inlier_fraction, abs=0.01)


def test_support_region_clipping(box_cloud):
    # only a sliver of the footprint rests on the table: CoM is off the support
    table = rectangle(-5, -5, -0.04, 5)
    r = evaluate_placement_stability(box_cloud, RigidPose.identity(), support_region=table)
    assert r.score == 0.0
    far = rectangle(10, 10, 11, 11)
    assert evaluate_placement_stability(box_cloud, RigidPose.identity(), support_region=far).degenerate


def test_lying_box_stable_when_rotated(box_cloud):
    r = evaluate_placement_stability(box_cloud, RigidPose(rot_x(np.pi / 2), [0, 0, 0]))
    assert r.score == 1.0


def test_empty_cloud_raises():
    with pytest.raises(EmptyGeometry):
        evaluate_placement_stability(PointCloud(np.zeros((0, 3))), RigidPose.identity())
