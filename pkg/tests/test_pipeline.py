import json

import numpy as np
import pytest

from placeability.errors import NoFeasiblePair
from placeability.grasp import WorkspaceBox
from placeability.pipeline import STAGES, ReasoningParams, SceneDescription, dumps, run_unified_reasoning
from placeability.placement import PackingHeuristicParams, TargetRegion
from placeability.scenes import (
    SHELF_CEILING,
    build_scene,
    load_scene,
    plane_mesh,
    save_scene,
    shelf_side_grasps,
    shelf_top_grasps,
    slab,
)
from placeability.scoring import UnifiedWeights


@pytest.fixture(scope="module")
def tabletop():
    return build_scene("tabletop")


@pytest.fixture(scope="module")
def report(tabletop):
    return run_unified_reasoning(tabletop, n_grasps=30, n_placements=8, seed=1)


def test_report_components_are_consistent(report):
    K, P = len(report.grasps), len(report.placements)
    assert report.scores.shape == report.placeability.shape == (K, P)
    q = np.array([g.quality for g in report.grasps])
    np.testing.assert_array_equal(report.f_pcg, q[:, None] * report.reach * report.collision.entries)
    expected = report.f_pcg * report.f_st[None] * report.f_alt * report.f_h[None]
    np.testing.assert_array_equal(report.placeability, expected)
    assert report.v_p.max() == 1.0 and report.v_g.max() == 1.0
    np.testing.assert_array_equal(report.scores, report.v_g[:, None] * report.v_p * report.collision.entries)


def test_ranking_and_breakdown(report):
    r = report.ranked
    assert len(r) == report.diagnostics["pairs_feasible"] == int((report.scores > 0).sum())
    assert np.all(np.diff(r.score) <= 0)
    b = report.breakdown(0)
    assert b["score"] == report.scores.max() > 0
    assert b["collision_free"] == 1 and b["reachable"] == 1
    assert b["placeability"] == pytest.approx(b["f_pcg"] * b["f_st"] * b["f_alt"] * b["f_h"])


def test_diagnostics(report):
    d = report.diagnostics
    assert d["placements_sampled"] == 48
    assert d["placements_sampled"] - d["placements_eliminated_collision"] == len(report.placements)
    assert d["pairs"] == len(report.grasps) * len(report.placements)
    assert d["grasps_in"] - d["grasps_eliminated_at_pick"] == len(report.grasps)


def test_best_placement_is_stable_and_on_the_table(report):
    k, p, _ = report.best
    c = report.placements[p]
    assert report.f_st[p] > 0.5
    assert 0.1 <= c.surface_point[0] <= 0.7


def test_json_is_deterministic_and_timing_optional(tabletop, report):
    a = report.to_json(top=5)
    b = run_unified_reasoning(tabletop, n_grasps=30, n_placements=8, seed=1).to_json(top=5)
    assert a == b
    data = json.loads(a)
    assert "timing" not in data and len(data["ranked"]) == 5
    timed = json.loads(report.to_json(timing=True))
    assert set(timed["timing"]) == set(STAGES)


def test_dumps_rounds_and_handles_infinity():
    text = dumps({"b": np.float64(1 / 3), "a": [np.inf, np.int64(2)], "c": np.array([True])})
    assert json.loads(text) == {"a": ["inf", 2], "b": 0.333333333, "c": [True]}


def test_heuristic_changes_placeability(tabletop):
    dense = ReasoningParams(heuristic=PackingHeuristicParams(mode="dense"))
    r = run_unified_reasoning(tabletop, params=dense, n_grasps=20, n_placements=8, seed=1)
    assert np.all((r.f_h >= 0) & (r.f_h <= 1)) and r.f_h.min() < 1


def test_unreachable_everything(tabletop):
    params = ReasoningParams(reachability=WorkspaceBox((5, 5, 5), (6, 6, 6)))
    with pytest.raises(NoFeasiblePair) as exc:
        run_unified_reasoning(tabletop, params=params, n_grasps=10, n_placements=4, seed=0)
    d = exc.value.diagnostics
    assert d["pairs_unreachable"] == d["pairs"] and d["pairs_feasible"] == 0


def test_blocked_region(tabletop):
    # a ceiling 5 cm above the table leaves no room for the object
    support = plane_mesh(0, -0.2, 0.4, 0.2)
    env = slab(-0.1, -0.3, 0.5, 0.3, 0.05, 0.07)
    scene = SceneDescription(TargetRegion(support, env), tabletop.obj, None, "blocked")
    with pytest.raises(NoFeasiblePair) as exc:
        run_unified_reasoning(scene, n_grasps=10, n_placements=4, seed=0)
    d = exc.value.diagnostics
    assert d["placements_eliminated_collision"] == d["placements_sampled"] == 24


def test_no_grasps(tabletop):
    with pytest.raises(NoFeasiblePair):
        run_unified_reasoning(tabletop, grasps=[], n_placements=4)


def test_weights_scale_scores(tabletop):
    base = run_unified_reasoning(tabletop, n_grasps=10, n_placements=4, seed=2)
    scaled = run_unified_reasoning(tabletop, params=ReasoningParams(weights=UnifiedWeights(2.0, 3.0)),
                                   n_grasps=10, n_placements=4, seed=2)
    np.testing.assert_allclose(scaled.scores, 6 * base.scores)
    assert base.best[:2] == scaled.best[:2]


def test_scene_directory_round_trip(tmp_path):
    scene = build_scene("shelf")
    save_scene(scene, tmp_path)
    back = load_scene(tmp_path)
    np.testing.assert_array_equal(back.obj.cloud.points, scene.obj.cloud.points)
    np.testing.assert_array_equal(back.target.obstacles.vertices, scene.target.obstacles.vertices)
    grasps = shelf_top_grasps(scene)
    a = run_unified_reasoning(scene, grasps, n_placements=6, seed=0).to_json()
    b = run_unified_reasoning(back, grasps, n_placements=6, seed=0).to_json()
    assert a == b


def test_shelf_orientation_depends_on_grasps():
    scene = build_scene("shelf")
    top = run_unified_reasoning(scene, shelf_top_grasps(scene), n_placements=20, seed=0)
    side = run_unified_reasoning(scene, shelf_side_grasps(scene), n_placements=20, seed=0)
    top_c = top.placements[top.best.placement]
    side_c = side.placements[side.best.placement]
    assert top_c.label != side_c.label
    # a top grasp cannot fit under the ceiling with the tall side up
    assert np.ptp(scene.obj.cloud_at(top_c.pose)[:, 2]) < SHELF_CEILING - 0.1
    with pytest.raises(ValueError):
        build_scene("kitchen")
