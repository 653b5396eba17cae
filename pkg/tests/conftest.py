import numpy as np
import pytest

from settrig.invariance import ConstraintSet, SystemModel
from settrig.polytope import HPolytope


def random_cset(rng, dim, n_rows):
    """Random bounded polytope with the origin strictly inside."""
    while True:
        H = rng.normal(size=(n_rows, dim))
        h = rng.uniform(0.5, 1.5, size=n_rows)
        P = HPolytope(H, h)
        from settrig.polytope import is_bounded
        if is_bounded(P):
            return P


def sample_in(V, rng, n, radius=(0.0, 1.0)):
    """Points of co(V) scaled by a radius drawn from ``radius``."""
    V = np.asarray(V)
    w = rng.dirichlet(np.full(len(V), 0.3), size=n)
    r = rng.uniform(*radius, size=(n, 1))
    return r * (w @ V)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def pilot():
    """Scalar integrator x+ = x + u with |x| <= 1, |u| <= 0.5."""
    sys = SystemModel(np.array([[1.0]]), np.array([[1.0]]))
    cs = ConstraintSet(HPolytope.inf_ball(1, 1.0), HPolytope.inf_ball(1, 0.5))
    return sys, cs


@pytest.fixture(scope="session")
def planar():
    """An unstable 2-state, 1-input plant used for 2-D checks."""
    sys = SystemModel(np.array([[1.1, 0.3], [0.0, 0.95]]), np.array([[0.1], [0.5]]))
    cs = ConstraintSet(HPolytope.inf_ball(2, 1.0), HPolytope.inf_ball(1, 1.0))
    return sys, cs
