import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from placeability.geometry import PointCloud
from placeability.oracle import uniform_box

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def box_cloud() -> PointCloud:
    """Dense scan of a 0.1 x 0.1 x 0.2 box standing on z = 0, object frame."""
    return uniform_box((0.1, 0.1, 0.2)).dense_cloud(3000, seed=0)


# One summary line per acceptance criterion, printed after the run.
_CRITERIA = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("detail", "")
        _CRITERIA[report.nodeid] = (report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (outcome, detail) in _CRITERIA.items():
        name = nodeid.split("::")[-1]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  {detail}")
