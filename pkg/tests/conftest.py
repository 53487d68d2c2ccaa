"""Pytest configuration and fixtures for collocate testing."""

import sys
from pathlib import Path

import pytest

# Add src to path for imports
src_path = Path(__file__).parent.parent / "src"
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))


def pytest_configure(config):
    """Register custom markers."""
    config.addinivalue_line("markers", "slow: crane batch benchmarks (many NLP solves)")


@pytest.fixture
def gauss2():
    """Two-point Gauss-Legendre scheme."""
    from collocate.basis import CollocationScheme

    return CollocationScheme.create("gauss", 2)


@pytest.fixture
def radau2():
    """Two-point Radau IIA scheme."""
    from collocate.basis import CollocationScheme

    return CollocationScheme.create("radau", 2)


@pytest.fixture
def crane_ocp():
    """Crane OCP with friction from (r0, θ0) = (1, 0.3)."""
    from collocate.model import make_crane_ocp

    return make_crane_ocp(1.0, 0.3)


@pytest.fixture
def frictionless_crane_ocp():
    """Velocity-independent crane (β = 0) from (r0, θ0) = (1, 0.3)."""
    from collocate.model import CraneParams, make_crane_ocp

    return make_crane_ocp(1.0, 0.3, CraneParams(beta=0.0))


@pytest.fixture
def rng():
    """Seeded numpy generator."""
    import numpy as np

    return np.random.default_rng(1234)
