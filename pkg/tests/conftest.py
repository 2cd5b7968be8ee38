import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def star_ring(rng, n, center=(0.0, 0.0), rmin=1.0, rmax=10.0):
    """Random simple CCW ring: strictly increasing angles, positive radii."""
    while True:
        ang = np.sort(rng.uniform(0, 2 * np.pi, n))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
        # gaps below pi keep the centre inside, so the ring is simple and CCW
        if gaps.min() > 1e-3 and gaps.max() < np.pi - 1e-3:
            break
    rad = rng.uniform(rmin, rmax, n)
    return np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1) + np.asarray(center)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def square():
    return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
