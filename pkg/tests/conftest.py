import numpy as np
import pytest

from clobs import gevp
from clobs.qstate import DensityEvolution
from clobs.spectrum import large_window, make_harmonic, make_two_ladders


@pytest.fixture(scope="session")
def harmonic16():
    s = make_harmonic(16)
    ev = DensityEvolution(s)
    T = large_window(s)
    gm = gevp.build(ev, T)
    return s, ev, T, gm, gevp.solve(gm)


@pytest.fixture(scope="session")
def cat():
    return make_two_ladders(8, 1.0, 1.05)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
