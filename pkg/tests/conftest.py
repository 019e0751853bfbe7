"""
Pytest configuration and shared fixtures.
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from modules.algebra import InclusionSpec
from modules.config import config
from modules.distribution import make_standard, standard_model


@pytest.fixture(scope="session")
def project_root_dir():
    """Return the project root directory."""
    return Path(__file__).parent.parent


@pytest.fixture(scope="function")
def rng():
    """Provide a freshly seeded generator so every test sees the same draws."""
    return np.random.default_rng(config.seed)


@pytest.fixture(scope="session")
def scalar_inclusion():
    """B = D = C."""
    return InclusionSpec.identity(1)


@pytest.fixture(scope="session")
def rademacher6(scalar_inclusion):
    """Scalar rademacher law at order 6."""
    return make_standard("rademacher", scalar_inclusion, 6)


@pytest.fixture(scope="session")
def semicircle6(scalar_inclusion):
    """Scalar semicircle law at order 6."""
    return make_standard("ov_semicircle", scalar_inclusion, 6)


@pytest.fixture(scope="session")
def rademacher_model():
    """Rademacher operator model over B = C."""
    return standard_model("rademacher", d_B=1)


@pytest.fixture(scope="session")
def semicircle_model_2():
    """Semicircle model over M_2 with η(b) = a b a."""
    a = 0.5 * np.array([[1.0, 0.5], [0.5, 1.0]])
    return standard_model("semicircle", d_B=2, a=a)


def scalar_values(d):
    """Moments m_1..m_N of a distribution over B = D = C as complex numbers."""
    return np.array([complex(m.reshape(-1)[0]) for m in d.moment_tensors()])
