import pytest

from placeability.config import DEFAULTS, RunConfig
from placeability.errors import ConfigError
from placeability.grasp import WorkspaceBox, always_reachable


def test_defaults_round_trip():
    cfg = RunConfig.from_mapping({})
    assert cfg.changed() == {}
    again = RunConfig.from_text(cfg.to_text())
    assert again.echo() == cfg.echo()
    assert set(cfg.echo()) == set(DEFAULTS)


def test_text_overrides_and_comments():
    cfg = RunConfig.from_text("""
        # tuned for a smaller gripper
        stability.k = 20   # steeper
        gripper.palm = 0.05, 0.05, 0.04
        heuristic.mode = sparse
    """)
    assert cfg["stability.k"] == 20.0
    assert cfg["gripper.palm"] == (0.05, 0.05, 0.04)
    assert cfg.stability().k == 20.0
    assert cfg.heuristic().mode == "sparse"
    assert set(cfg.changed()) == {"stability.k", "gripper.palm", "heuristic.mode"}


def test_load_merges_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed = 5\nweights.place = 2\n")
    cfg = RunConfig.load(path, {"seed": "9"})
    assert cfg["seed"] == 9 and cfg["weights.place"] == 2.0


def test_records():
    cfg = RunConfig.from_mapping({"reach.mode": "always"})
    assert cfg.heuristic() is None
    assert cfg.reachability() is always_reachable
    assert isinstance(RunConfig.from_mapping({}).reachability(), WorkspaceBox)
    assert cfg.altitude().z_mid == pytest.approx(0.04)
    assert cfg.gripper().max_opening == 0.085


def test_with_overrides():
    cfg = RunConfig.from_mapping({}).with_overrides(stability__c=0.8)
    assert cfg["stability.c"] == 0.8


@pytest.mark.parametrize("text", [
    "nonsense.key = 1",
    "stability.c = 1.5",
    "stability.k = abc",
    "gripper.palm = 1, 2",
    "heuristic.mode = tight",
    "reach.mode = maybe",
    "collision.margin = -0.1",
    "pipeline.n_grasps = 0",
    "weights.grasp = 0",
    "just a line",
])
def test_invalid(text):
    with pytest.raises(ConfigError):
        RunConfig.from_text(text)


def test_echo_is_sorted_strings():
    echo = RunConfig.from_mapping({}).echo()
    assert list(echo) == sorted(echo)
    assert all(isinstance(v, str) for v in echo.values())
