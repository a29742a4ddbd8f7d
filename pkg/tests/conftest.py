import numpy as np
import pytest

from disptrans.core import DisparityImage, QuadraticRoadModel
from disptrans.synth import SyntheticSpec, generate_ground_truth

# filled by test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_spec():
    """A small rolled copy of the reference road (fast to estimate)."""
    return SyntheticSpec(width=96, height=72, gamma=0.2)


@pytest.fixture
def gentle_model():
    """A road with realistic slopes (well under one disparity per row)."""
    return QuadraticRoadModel(20.0, 0.05, 0.0005)


def constant_map(w=12, h=9, c=42.0):
    return DisparityImage(np.full((h, w), c), np.ones((h, w), dtype=bool))


def row_ramp(w=64, h=48, slope=1.0, offset=10.0):
    return generate_ground_truth(SyntheticSpec(width=w, height=h, model=QuadraticRoadModel(offset, slope, 0.0)))
