import numpy as np
import pytest

from settrig.errors import EmptyCandidates, StateOutsideSet
from settrig.invariance import ConstraintSet, SystemModel, compute_contractive_set
from settrig.polytope import HPolytope, gauge
from settrig.triggered_online import (OnlineConfig, OnlineController, algorithm1_step, feasible_intervals,
                                      select_interval, solve_problem1)

from conftest import sample_in

U_GRID = np.arange(-0.5, 0.5 + 5e-5, 1e-4)


def grid_problem1(x, j, lam=0.5):
    """min over gridded u of |x + j u| / |x| with every intermediate in [-1, 1]."""
    k = np.arange(1, j + 1)
    path = x + k[None, :] * U_GRID[:, None]
    ok = np.all(np.abs(path) <= 1.0 + 1e-12, axis=1)
    eps = np.abs(path[:, -1]) / abs(x)
    eps = eps[ok & (eps <= lam + 1e-12)]
    return eps.min() if eps.size else None


@pytest.fixture(scope="module")
def pilot_set(pilot):
    sys, cs = pilot
    return sys, cs, compute_contractive_set(sys, cs, 0.5)


@pytest.fixture(scope="module")
def planar_set(planar):
    sys, cs = planar
    return sys, cs, compute_contractive_set(sys, cs, 0.9)


class TestProblem1:
    def test_one_step(self, pilot_set):
        s = solve_problem1(*pilot_set, [1.0], 1)
        np.testing.assert_allclose(s.u, [-0.5], atol=1e-12)
        assert s.eps == pytest.approx(0.5, abs=1e-12)

    def test_two_steps(self, pilot_set):
        s = solve_problem1(*pilot_set, [1.0], 2)
        np.testing.assert_allclose(s.u, [-0.5], atol=1e-12)
        assert s.eps == pytest.approx(0.0, abs=1e-12)

    def test_origin(self, pilot_set):
        s = solve_problem1(*pilot_set, [0.0], 3)
        assert s.eps == 0.0 and not s.u.any()

    def test_grid_oracle(self, pilot_set, rng):
        # the grid resolves eps only to about j * 0.5e-4 / |x|, so stay away from 0
        for x in rng.choice([-1, 1], size=50) * rng.uniform(0.2, 1.0, size=50):
            for j in (1, 2, 3):
                s = solve_problem1(*pilot_set, [x], j)
                ref = grid_problem1(x, j)
                assert (s is None) == (ref is None)
                if s is not None:
                    assert abs(s.eps - ref) <= 1e-3

    def test_infeasible_interval(self):
        # holding one input too long lets the unstable modes leave X
        sys = SystemModel([[1.2, 1.0], [0.0, 1.1]], [[0.1], [0.5]])
        cs = ConstraintSet(HPolytope.inf_ball(2, 1.0), HPolytope.inf_ball(1, 1.0))
        S = compute_contractive_set(sys, cs, 0.9)
        J = feasible_intervals(sys, cs, S, S.V.vertices[0], OnlineConfig(15))
        assert J == list(range(1, 9))
        assert solve_problem1(sys, cs, S, S.V.vertices[0], 9) is None

    def test_constraints_hold(self, planar_set, rng):
        sys, cs, S = planar_set
        P, G = sys.step_matrices(8)
        for x in sample_in(S.V.vertices, rng, 30):
            for j in range(1, 9):
                s = solve_problem1(sys, cs, S, x, j)
                if s is None:
                    continue
                assert np.all(cs.U.H @ s.u <= cs.U.h + 1e-7)
                for k in range(1, j + 1):
                    assert np.all(cs.X.H @ (P[k] @ x + G[k] @ s.u) <= cs.X.h + 1e-7)
                assert gauge(S.S, P[j] @ x + G[j] @ s.u) <= s.eps * gauge(S.S, x) + 1e-7
                assert 0.0 <= s.eps <= S.lambda_certified


class TestFeasibleIntervals:
    def test_pilot(self, pilot_set):
        assert feasible_intervals(*pilot_set, [1.0], OnlineConfig(2)) == [1, 2]

    def test_origin(self, pilot_set):
        assert feasible_intervals(*pilot_set, [0.0], OnlineConfig(3)) == [1, 2, 3]

    def test_contains_one(self, planar_set, rng):
        for x in sample_in(planar_set[2].V.vertices, rng, 50):
            assert 1 in feasible_intervals(*planar_set, x, OnlineConfig(5))


class TestSelect:
    def test_length_only(self):
        assert select_interval({1: 0.5, 2: 0.9}, OnlineConfig(2, 0, 1)) == 2

    def test_arithmetic(self):
        # rewards 5.01 and 0.52
        assert select_interval({1: 0.5, 2: 0.9}, OnlineConfig(2, 10, 0.01)) == 1

    def test_tie_goes_to_smallest(self):
        assert select_interval({1: 0.5, 2: 0.0}, OnlineConfig(2, 1, 0)) == 1

    def test_exponential_filter(self):
        cfg = OnlineConfig(3, 0, 1, exponential_mode=True)
        # 0.5**2 = 0.25 admits j=2, 0.125 rejects j=3
        assert select_interval({1: 0.4, 2: 0.2, 3: 0.2}, cfg, lam=0.5) == 2
        assert select_interval({1: 0.6, 2: 0.3, 3: 0.2}, cfg, lam=0.5) == 1

    def test_empty(self):
        with pytest.raises(EmptyCandidates):
            select_interval({}, OnlineConfig(2))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            OnlineConfig(0)
        with pytest.raises(ValueError):
            OnlineConfig(3, -1.0, 1.0)


class TestStep:
    def test_tie_case(self, pilot_set):
        u, j, eps = algorithm1_step(*pilot_set, [1.0], OnlineConfig(2, 1, 0))
        assert j == 1 and eps == pytest.approx(0.5)
        np.testing.assert_allclose(u, [-0.5])

    def test_length_only(self, pilot_set):
        u, j, eps = algorithm1_step(*pilot_set, [1.0], OnlineConfig(2, 0, 1))
        assert j == 2 and eps == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(u, [-0.5])

    def test_origin(self, pilot_set):
        u, j, eps = algorithm1_step(*pilot_set, [0.0], OnlineConfig(4, 0, 1))
        assert (j, eps) == (4, 0.0) and not u.any()

    def test_outside(self, pilot_set):
        with pytest.raises(StateOutsideSet):
            algorithm1_step(*pilot_set, [1.01], OnlineConfig(2))

    def test_decrease(self, planar_set, rng):
        sys, cs, S = planar_set
        ctrl = OnlineController(sys, cs, S, OnlineConfig(6, 1, 1))
        P, G = sys.step_matrices(6)
        for x in sample_in(S.V.vertices, rng, 40):
            u, j, eps = ctrl.step(x)
            x_next = P[j] @ x + G[j] @ u
            assert gauge(S.S, x_next) <= eps * gauge(S.S, x) + 1e-7
            assert gauge(S.S, x_next) <= S.lambda_certified * gauge(S.S, x) + 1e-7
