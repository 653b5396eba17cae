import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from settrig import polytope as pt
from settrig.errors import DimensionMismatch, EmptyPolytope, NegativeScale, NotCSet, UnboundedPolytope
from settrig.polytope import HPolytope

from conftest import random_cset

BOX = HPolytope.inf_ball(2, 1.0)


def as_set(P):
    """Facet rows as a set of rounded (unit normal, offset) tuples."""
    n = np.linalg.norm(P.H, axis=1)
    return {tuple(np.round(np.append(r / k, o / k), 9)) for r, o, k in zip(P.H, P.h, n)}


def sorted_rows(V):
    V = np.asarray(V)
    return V[np.lexsort(V.T[::-1])]


class TestNormalize:
    def test_row_scaling(self):
        P = pt.normalize(HPolytope([[2.0], [-2.0]], [4.0, 4.0]))
        np.testing.assert_allclose(P.H.ravel(), [0.5, -0.5])
        np.testing.assert_allclose(P.h, [1.0, 1.0])

    def test_unit_box_unchanged(self):
        P = pt.normalize(BOX)
        np.testing.assert_array_equal(P.H, BOX.H)
        np.testing.assert_array_equal(P.h, BOX.h)

    def test_boundary_origin(self):
        with pytest.raises(NotCSet):
            pt.normalize(HPolytope([[1.0], [-1.0]], [1.0, 0.0]))

    def test_unbounded(self):
        with pytest.raises(NotCSet):
            pt.normalize(HPolytope([[1.0, 0.0], [-1.0, 0.0]], [1.0, 1.0]))


@pytest.mark.parametrize("x, inside", [((0, 0), True), ((1, 1), True), ((1.1, 0), False)])
def test_membership(x, inside):
    assert pt.membership(BOX, x) is inside


def test_membership_dimension():
    with pytest.raises(DimensionMismatch):
        pt.membership(BOX, [0.0, 0.0, 0.0])


def bisect_gauge(S, x, hi=10.0):
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if pt.membership(pt.scale(S, mid), x, pt.Tolerance(feas_tol=1e-15)):
            hi = mid
        else:
            lo = mid
    return hi


class TestGauge:
    def test_scaled_boundary(self):
        assert pt.gauge(BOX, [0.5, 0.0]) == 0.5

    def test_origin(self, rng):
        assert pt.gauge(random_cset(rng, 3, 8), np.zeros(3)) == 0.0

    def test_rectangle_matches_bisection(self):
        S = HPolytope.box([-2, -1], [2, 1])
        assert pt.gauge(S, [1.0, 0.5]) == pytest.approx(0.5, abs=1e-12)
        assert bisect_gauge(S, [1.0, 0.5]) == pytest.approx(0.5, abs=1e-12)

    def test_needs_cset(self):
        with pytest.raises(NotCSet):
            pt.gauge(HPolytope([[1.0], [-1.0]], [1.0, 0.0]), [0.5])

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(0, 20))
    def test_homogeneity(self, x, alpha):
        S = random_cset(np.random.default_rng(0), 3, 9)
        x = np.array(x)
        assert pt.gauge(S, alpha * x) == pytest.approx(alpha * pt.gauge(S, x), abs=1e-6)

    def test_membership_duality(self, rng):
        S = random_cset(rng, 3, 10)
        feas = pt.Tolerance().feas_tol
        for _ in range(1000):
            x = rng.normal(size=3)
            mu = rng.uniform(0, 3 * pt.gauge(S, x) + 0.1)
            assert pt.membership(pt.scale(S, mu), x) == (mu >= pt.gauge(S, x) - feas)


class TestScale:
    def test_half(self):
        P = pt.scale(BOX, 0.5)
        assert pt.contains(P, HPolytope.inf_ball(2, 0.5))
        assert pt.contains(HPolytope.inf_ball(2, 0.5), P)

    def test_identity(self, rng):
        S = random_cset(rng, 2, 6)
        np.testing.assert_array_equal(pt.scale(S, 1.0).h, S.h)

    def test_zero_is_origin(self):
        P = pt.scale(BOX, 0.0)
        assert np.all(P.h == 0.0)
        np.testing.assert_array_equal(pt.vertices(P).vertices, [[0.0, 0.0]])

    def test_negative(self):
        with pytest.raises(NegativeScale):
            pt.scale(BOX, -0.1)


class TestIntersectContains:
    def test_nesting(self):
        half = HPolytope.inf_ball(2, 0.5)
        assert as_set(pt.intersect(BOX, half)) == as_set(half)

    def test_idempotent(self, rng):
        P = pt.remove_redundancy(random_cset(rng, 2, 7))
        assert as_set(pt.intersect(P, P)) == as_set(P)

    def test_empty(self):
        R = pt.intersect(HPolytope([[1.0]], [0.0]), HPolytope([[-1.0]], [-1.0]))
        assert pt.is_empty(R)

    def test_dimension(self):
        with pytest.raises(DimensionMismatch):
            pt.intersect(BOX, HPolytope.inf_ball(3))

    def test_contains_examples(self):
        half = HPolytope.inf_ball(2, 0.5)
        assert pt.contains(BOX, half)
        assert not pt.contains(half, BOX)
        assert pt.contains(BOX, BOX)

    def test_contains_intersection(self, rng):
        for _ in range(30):
            P = random_cset(rng, 2, 6)
            Q = HPolytope(rng.normal(size=(5, 2)), rng.uniform(-0.2, 1.0, size=5))
            assert pt.contains(P, pt.intersect(P, Q))


class TestRedundancy:
    def test_1d(self):
        R = pt.remove_redundancy(HPolytope([[1.0], [1.0]], [1.0, 2.0]))
        np.testing.assert_array_equal(R.H, [[1.0]])
        np.testing.assert_array_equal(R.h, [1.0])

    def test_box_minimal(self):
        assert as_set(pt.remove_redundancy(BOX)) == as_set(BOX)

    def test_diagonal_cut(self):
        # x1 + x2 <= 2 touches the square only at (1, 1)
        P = HPolytope(np.vstack([BOX.H, [1.0, 1.0]]), np.append(BOX.h, 2.0))
        np.testing.assert_allclose(sorted_rows(pt.vertices(P).vertices),
                                   sorted_rows(pt.vertices(BOX).vertices))
        assert as_set(pt.remove_redundancy(P)) == as_set(BOX)

    def test_each_removed_row_is_implied(self, rng):
        for _ in range(20):
            P = random_cset(rng, 3, 14)
            R = pt.remove_redundancy(P)
            for row, off in zip(P.H, P.h):
                assert pt.support(R, row) <= off + 1e-7


class TestVertices:
    def test_square(self):
        V = pt.vertices(BOX).vertices
        np.testing.assert_allclose(sorted_rows(V), [[-1, -1], [-1, 1], [1, -1], [1, 1]])

    def test_interval(self):
        np.testing.assert_allclose(sorted_rows(pt.vertices(HPolytope.inf_ball(1)).vertices), [[-1], [1]])

    def test_simplex(self):
        P = HPolytope([[1, 1], [-1, 0], [0, -1]], [1, 0, 0])
        np.testing.assert_allclose(sorted_rows(pt.vertices(P).vertices), [[0, 0], [0, 1], [1, 0]],
                                   atol=1e-12)

    def test_errors(self):
        with pytest.raises(EmptyPolytope):
            pt.vertices(HPolytope.empty(2))
        with pytest.raises(UnboundedPolytope):
            pt.vertices(HPolytope([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]], [1, 1, 1]))

    @pytest.mark.parametrize("dim, rows", [(2, 9), (3, 14)])
    def test_round_trip_against_hull(self, rng, dim, rows):
        for _ in range(10):
            P = random_cset(rng, dim, rows)
            V = pt.vertices(P).vertices
            hull = ConvexHull(V)
            assert len(hull.vertices) == len(V)
            # hull facets as an H-polytope: equations are [n, c] with n.x + c <= 0
            Q = HPolytope(hull.equations[:, :-1], -hull.equations[:, -1])
            assert pt.contains(P, Q) and pt.contains(Q, P)


class TestProjection:
    def test_grid_oracle(self):
        # |x + u| <= 0.25, |u| <= 0.5
        P = HPolytope([[1, 1], [-1, -1], [0, 1], [0, -1]], [0.25, 0.25, 0.5, 0.5])
        Q = pt.project_eliminate(P, 1)
        lo, hi = -pt.support(Q, [-1.0]), pt.support(Q, [1.0])
        u = np.linspace(-0.5, 0.5, 10001)
        assert (lo, hi) == pytest.approx((np.min(-u - 0.25), np.max(-u + 0.25)), abs=1e-12)
        assert (lo, hi) == pytest.approx((-0.75, 0.75), abs=1e-12)

    def test_product(self):
        P = HPolytope.inf_ball(2)
        Q = pt.project_eliminate(P, 1)
        assert as_set(Q) == as_set(HPolytope.inf_ball(1))

    def test_empty(self):
        assert pt.is_empty(pt.project_eliminate(HPolytope.empty(3), 1))

    def test_shadow(self, rng):
        n, m = 2, 2
        P = random_cset(rng, n + m, 12)
        Q = pt.project_eliminate(P, n)
        lo = [-pt.support(Q, -e) for e in np.eye(n)]
        hi = [pt.support(Q, e) for e in np.eye(n)]

        def witness(x):
            res = linprog(np.zeros(m), A_ub=P.H[:, n:], b_ub=P.h - P.H[:, :n] @ x,
                          bounds=[(None, None)] * m, method="highs")
            return res.status == 0

        inside = outside = 0
        while inside < 500 or outside < 500:
            x = rng.uniform(np.subtract(lo, 0.3), np.add(hi, 0.3))
            slack = np.min(Q.h - Q.H @ x)
            if abs(slack) < 1e-6:
                continue
            if slack > 0 and inside < 500:
                assert witness(x)
                inside += 1
            elif slack < 0 and outside < 500:
                assert not witness(x)
                outside += 1


class TestSerialization:
    def test_json(self, rng):
        P = random_cset(rng, 3, 7)
        Q = HPolytope.from_json(P.to_json())
        np.testing.assert_array_equal(P.H, Q.H)
        np.testing.assert_array_equal(P.h, Q.h)

    def test_text(self, rng):
        P = random_cset(rng, 3, 7)
        Q = HPolytope.from_text(P.to_text())
        np.testing.assert_array_equal(P.H, Q.H)
        np.testing.assert_array_equal(P.h, Q.h)

    def test_zero_row_rejected(self):
        with pytest.raises(ValueError):
            HPolytope([[0.0, 0.0]], [1.0])
