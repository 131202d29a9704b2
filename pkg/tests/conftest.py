import math

import numpy as np
import pytest

from liouville.model import SingularModel, SingularSource
from liouville.torus import TorusGrid

EIGHT_PI = 8 * math.pi
TODA = [[2.0, -1.0], [-1.0, 2.0]]

ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid64():
    return TorusGrid(64)


@pytest.fixture(scope="session")
def scalar_singular_128():
    """N=1, A=[[1]], one source with alpha=-0.5 at the centre."""
    return SingularModel([[1.0]], TorusGrid(128), [SingularSource((0.5, 0.5), [-0.5])])


def random_spd(rng, N):
    B = rng.normal(size=(N, N))
    return B @ B.T + 0.1 * np.eye(N)


def band_limited(rng, grid, kmax=6):
    """Random real field with modes |k_1|, |k_2| <= kmax (no Nyquist content)."""
    X, Y = grid.mesh()
    u = np.zeros(grid.shape)
    for k1 in range(-kmax, kmax + 1):
        for k2 in range(0, kmax + 1):
            a, b = rng.normal(size=2)
            arg = 2 * math.pi * (k1 * X + k2 * Y)
            u += a * np.cos(arg) + b * np.sin(arg)
    return u
