import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from ucbqrl.dist import make_dist  # noqa: E402

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@st.composite
def finite_dists(draw, max_atoms=6, hi=5.0, grid=10):
    """Distributions on a coarse grid inside [0, hi], so atoms often coincide."""
    n = draw(st.integers(1, max_atoms))
    values = draw(st.lists(st.integers(0, int(hi * grid)), min_size=n, max_size=n))
    weights = draw(st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n))
    total = sum(weights)
    return make_dist([(v / grid, w / total) for v, w in zip(values, weights)])


def random_dist(rng, hi=5.0, max_atoms=6, grid=10):
    n = rng.integers(1, max_atoms + 1)
    values = rng.integers(0, int(hi * grid) + 1, size=n) / grid
    w = rng.dirichlet(np.ones(n))
    w = np.maximum(w, 1e-6)
    return make_dist(zip(values, w / w.sum()))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
