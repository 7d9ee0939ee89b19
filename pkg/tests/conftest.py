import sys

import pytest

from navsim.evaluation import SHAPES, generate_synthetic_map
from navsim.guidance import GuidanceConfig
from navsim.model import FrameInput, Point3, Pose


def pytest_runtest_logreport(report):
    # one visible verdict line per acceptance test
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    status = "PASS" if report.passed else "FAIL"
    name = report.nodeid.split("::")[-1]
    print(f"\n[acceptance] {name}: {status}", file=sys.__stderr__)


@pytest.fixture(scope="session")
def straight_world():
    return generate_synthetic_map(SHAPES["straight"], 0.0, 0)


@pytest.fixture(scope="session")
def square_world():
    return generate_synthetic_map(SHAPES["square"], 0.0, 0)


@pytest.fixture
def default_cfg():
    return GuidanceConfig()


def make_frame(index, x, z, tracked=True, observations=(), detections=()):
    return FrameInput(
        frame=index,
        timestamp=index / 30.0,
        pose=Pose(position=Point3(x, 0.0, z)),
        observations=list(observations),
        detections=list(detections),
        tracked=tracked,
    )
