import json
import subprocess
import sys

import pytest

from placeability.cli import main

FAST = ["--set", "pipeline.n_placements=4", "--set", "pipeline.n_grasps=15"]


@pytest.fixture(scope="module")
def shelf_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("shelf")
    assert main(["export-scene", "--scene", "shelf", "--dir", str(d), "--out", str(d / "listing.txt")]) == 0
    return d


@pytest.fixture(scope="module")
def table_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("table")
    assert main(["export-scene", "--scene", "tabletop", "--dir", str(d), "--out", str(d / "listing.txt")]) == 0
    return d


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_export_lists_files(shelf_dir):
    names = {p.name for p in shelf_dir.iterdir()}
    assert {"object.ply", "target_support.obj", "target_env.obj", "grasps_top.txt", "grasps_side.txt"} <= names


def test_unify_from_files_is_reproducible(shelf_dir, capsys):
    args = ["unify", "--scene-dir", str(shelf_dir), "--grasps", str(shelf_dir / "grasps_top.txt")] + FAST
    code, first, _ = run(args, capsys)
    assert code == 0
    _, second, _ = run(args, capsys)
    assert first == second
    data = json.loads(first)
    assert data["seed"] == 0 and data["config"]["pipeline.n_placements"] == "4"
    assert data["ranked"][0]["score"] > 0 and "timing" not in data


def test_unify_timing_flag(capsys):
    code, out, _ = run(["unify", "--scene", "tabletop", "--timing"] + FAST, capsys)
    assert code == 0 and "timing" in json.loads(out)


def test_unify_infeasible_reports_diagnostics(capsys):
    args = ["unify", "--scene", "tabletop", "--error-json", "--set", "reach.lower=5,5,5",
            "--set", "reach.upper=6,6,6"] + FAST
    code, out, _ = run(args, capsys)
    assert code == 2
    err = json.loads(out)
    assert err["error"] == "NoFeasiblePair"
    assert err["diagnostics"]["pairs_unreachable"] == err["diagnostics"]["pairs"]


def test_bad_input_exit_codes(tmp_path, capsys):
    code, _, err = run(["unify", "--grasps", str(tmp_path / "missing.txt")], capsys)
    assert code == 1 and "error" in err
    code, out, _ = run(["unify", "--set", "stability.c=2", "--error-json"], capsys)
    assert code == 1 and json.loads(out)["error"] == "ConfigError"
    (tmp_path / "bad.obj").write_text("v 0 0 0\nf 1 2 3\n")
    code, out, _ = run(["score-placements", "--cloud", str(tmp_path / "bad.obj"), "--support",
                        str(tmp_path / "bad.obj"), "--error-json"], capsys)
    assert code == 1 and json.loads(out)["error"] == "ParseError"


def test_score_placements(table_dir, tmp_path):
    out = tmp_path / "scores.json"
    code = main(["score-placements", "--cloud", str(table_dir / "object.ply"),
                 "--support", str(table_dir / "target_support.obj"), "--env", str(table_dir / "target_env.obj"),
                 "--objects", str(table_dir / "target_object_0.obj"), str(table_dir / "target_object_1.obj"),
                 "-n", "3", "--set", "heuristic.mode=sparse", "--out", str(out)])
    assert code == 0
    data = json.loads(out.read_text())
    d = data["diagnostics"]
    assert d["sampled"] == 18 and d["retained"] == len(data["candidates"])
    for c in data["candidates"]:
        assert c["aggregate"] == pytest.approx(c["f_st"] * c["f_h"], abs=1e-8)
        assert isinstance(c["clearance"], float)


def test_sweeps(capsys):
    code, out, _ = run(["sweep-edge", "--object", "offset-mass", "--direction", "-1",
                        "--set", "sweep.steps=21", "--set", "sweep.points=2000"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "overhang_fraction,score,inlier_fraction" and len([x for x in lines if x[0] != "#"]) == 22
    assert "oracle_threshold=0.75" in out and "# seed = 0" in out
    code, out, _ = run(["sweep-incline", "--object", "box", "--size", "0.1,0.1,0.1",
                        "--set", "sweep.angle_steps=31", "--set", "sweep.points=2000"], capsys)
    assert code == 0 and out.startswith("angle_deg,score") and "oracle_threshold=45" in out


def test_heuristic_map(table_dir, capsys):
    code, out, _ = run(["heuristic-map", "--cloud", str(table_dir / "object.ply"),
                        "--support", str(table_dir / "target_support.obj"),
                        "--objects", str(table_dir / "target_object_0.obj"), "--resolution", "0.15",
                        "--mode", "dense"], capsys)
    assert code == 0
    rows = [r.split(",") for r in out.splitlines() if r and r[0] != "#"][1:]
    assert len(rows) == 16
    assert all(0.0 <= float(r[3]) <= 1.0 for r in rows)


def test_heuristic_map_needs_mode(table_dir, capsys):
    code, _, err = run(["heuristic-map", "--cloud", str(table_dir / "object.ply"),
                        "--support", str(table_dir / "target_support.obj")], capsys)
    assert code == 1 and "mode" in err


def test_bench(capsys):
    code, out, _ = run(["bench", "--counts", "5,10", "--set", "pipeline.n_placements=3"], capsys)
    assert code == 0
    rows = [r for r in out.splitlines() if r and r[0] != "#"]
    assert rows[0].startswith("n_grasps,repeat") and len(rows) == 3


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "placeability", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "unify" in res.stdout
