import numpy as np
import pytest

from zenolab.operators import build_random_hermitian, build_random_projection, constant_family, random_state


@pytest.fixture(scope="session")
def dim32():
    """Seeded dim-32 rank-8 instance with spectrum in [0, 5]."""
    h = build_random_hermitian(11, 32, ("uniform", 5.0))
    p = build_random_projection(12, 32, 8)
    f = random_state(13, 32)
    return h, constant_family(p), f


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_psd(seed, dim, lam_max=3.0, real=False):
    return build_random_hermitian(seed, dim, ("uniform", lam_max), real=real)
