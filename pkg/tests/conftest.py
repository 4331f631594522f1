import numpy as np
import pytest

from gnlab.model import ModelSpec


@pytest.fixture(scope="session")
def reference_points():
    return ((0.2, 1.5), (0.4, 1.0))


@pytest.fixture
def small_spec():
    return ModelSpec(n_sites=3, spacing=0.5, bare_mass=0.2, coupling_sq=1.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
