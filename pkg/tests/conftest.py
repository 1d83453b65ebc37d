import numpy as np
import pytest

from beamsynth.manifold import LsSystem


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_system(rng, dim=8, targets=12) -> LsSystem:
    a = rng.standard_normal((dim, targets)) + 1j * rng.standard_normal((dim, targets))
    u = rng.standard_normal(targets) + 1j * rng.standard_normal(targets)
    return LsSystem(u, a)


def random_unit_vector(rng, dim=8) -> np.ndarray:
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, dim))
