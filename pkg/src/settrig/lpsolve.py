"""Dense two-phase simplex with Bland's rule.

Programs are stated as

    minimize c @ x  s.t.  A_ub @ x <= b_ub,  A_eq @ x == b_eq,  lo <= x <= hi

and solved either directly (primal route, bounds handled by variable
shifts) or through the LP dual when the program has many more inequality
rows than variables (dual route). Both routes run the same pivoting kernel,
so identical inputs always give bitwise identical answers.
"""
import enum
from dataclasses import dataclass, field

import numpy as np

from ._kernels import get_kernel
from .errors import MalformedProgram, NumericalError
from .tolerance import default_tolerance


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _as_matrix(name, A, b, n):
    if A is None and b is None:
        return np.zeros((0, n)), np.zeros(0)
    if A is None or b is None:
        raise MalformedProgram(f"{name}: matrix and right-hand side must be given together")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float)).ravel()
    if A.size == 0:
        A = A.reshape(0, n)
    if A.ndim != 2 or A.shape[1] != n:
        raise MalformedProgram(f"{name} has {A.shape[-1]} columns, expected {n}")
    if A.shape[0] != b.shape[0]:
        raise MalformedProgram(f"{name} has {A.shape[0]} rows but {b.shape[0]} offsets")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise MalformedProgram(f"{name} contains non-finite entries")
    return A, b


@dataclass(frozen=True)
class LinearProgram:
    """A dense LP. ``bounds`` defaults to free variables.

    ``bounds`` may be a single ``(lo, hi)`` pair applied to every variable
    or one pair per variable; ``None`` stands for an infinite bound.
    """

    c: np.ndarray
    A_ub: np.ndarray = None
    b_ub: np.ndarray = None
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    bounds: object = None
    lo: np.ndarray = field(init=False, repr=False)
    hi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float)).ravel()
        if c.size == 0 or not np.all(np.isfinite(c)):
            raise MalformedProgram("cost vector must be non-empty and finite")
        n = c.size
        A_ub, b_ub = _as_matrix("A_ub", self.A_ub, self.b_ub, n)
        A_eq, b_eq = _as_matrix("A_eq", self.A_eq, self.b_eq, n)
        lo, hi = _parse_bounds(self.bounds, n)
        for name, val in [("c", c), ("A_ub", A_ub), ("b_ub", b_ub), ("A_eq", A_eq),
                          ("b_eq", b_eq), ("lo", lo), ("hi", hi)]:
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n(self):
        return self.c.size


def _parse_bounds(bounds, n):
    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    if bounds is None:
        return lo, hi
    pairs = list(bounds)
    if len(pairs) == 2 and not isinstance(pairs[0], (tuple, list, np.ndarray)):
        pairs = [tuple(pairs)] * n
    if len(pairs) != n:
        raise MalformedProgram(f"got {len(pairs)} bound pairs for {n} variables")
    for i, pair in enumerate(pairs):
        try:
            a, b = pair
        except (TypeError, ValueError):
            raise MalformedProgram(f"bound {i} is not a (lo, hi) pair") from None
        lo[i] = -np.inf if a is None else float(a)
        hi[i] = np.inf if b is None else float(b)
        if np.isnan(lo[i]) or np.isnan(hi[i]) or lo[i] == np.inf or hi[i] == -np.inf:
            raise MalformedProgram(f"bound {i} = {pair!r} is not usable")
    return lo, hi


@dataclass(frozen=True)
class LpResult:
    status: Status
    x: np.ndarray = None
    objective: float = np.nan
    pivots: int = 0
    route: str = ""

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL


def _two_phase(A, b, cost, init_basis, tol, kernel):
    """Solve ``min cost @ z  s.t. A z = b, z >= 0`` with ``b >= 0``.

    ``init_basis[i]`` names a column equal to the unit vector ``e_i`` or is
    ``-1``, in which case an artificial variable is added for row ``i``.
    Returns ``(status, z, basis, pivots)``.
    """
    m, N = A.shape
    art_rows = np.flatnonzero(init_basis < 0)
    n_art = art_rows.size
    T = np.zeros((m + 1, N + n_art + 1))
    T[:m, :N] = A
    T[:m, -1] = b
    basis = init_basis.astype(np.int64).copy()
    T[art_rows, N + np.arange(n_art)] = 1.0
    basis[art_rows] = N + np.arange(n_art)
    max_iter = 50 * (m + N) + 1000
    pivots = 0

    if n_art:
        T[m, :] = -T[art_rows, :].sum(axis=0)
        T[m, N:N + n_art] = 0.0
        status, it = kernel.iterate(T, basis, N, tol.rank_tol, max_iter)
        pivots += it
        if status == 2:
            raise NumericalError("simplex iteration limit reached in phase 1")
        # well below feas_tol so near-infeasible programs are never accepted
        # with a residual that the final constraint check would reject
        phase1_tol = tol.rank_tol * max(1.0, float(b[art_rows].max()))
        if -T[m, -1] > phase1_tol:
            return Status.INFEASIBLE, None, basis, pivots
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] < N:
                continue
            row = np.abs(T[i, :N])
            cand = np.flatnonzero(row > tol.rank_tol)
            if cand.size:
                kernel.pivot(T, i, int(cand[0]))
                basis[i] = cand[0]
            else:
                keep[i] = False
        rows = np.append(np.flatnonzero(keep), m)
        cols = np.append(np.arange(N), N + n_art)
        T = np.ascontiguousarray(T[np.ix_(rows, cols)])
        basis = np.ascontiguousarray(basis[keep])
        m = basis.size

    T[m, :] = 0.0
    T[m, :N] = cost
    for i in range(m):
        cb = cost[basis[i]]
        if cb != 0.0:
            T[m, :] -= cb * T[i, :]
    status, it = kernel.iterate(T, basis, N, tol.rank_tol, max_iter)
    pivots += it
    if status == 2:
        raise NumericalError("simplex iteration limit reached in phase 2")
    if status == 1:
        return Status.UNBOUNDED, None, basis, pivots
    z = np.zeros(N)
    z[basis] = np.maximum(T[:m, -1], 0.0)
    return Status.OPTIMAL, z, basis, pivots


def _equilibrate(A, b):
    scale = np.abs(A).max(axis=1) if A.shape[1] else np.zeros(A.shape[0])
    scale[scale == 0.0] = 1.0
    return A / scale[:, None], b / scale


def _inequality_form(lp):
    """All constraints as ``G x <= g`` with x free."""
    n = lp.n
    eye = np.eye(n)
    lo_rows = np.isfinite(lp.lo)
    hi_rows = np.isfinite(lp.hi)
    G = np.vstack([lp.A_ub, lp.A_eq, -lp.A_eq, eye[hi_rows], -eye[lo_rows]])
    g = np.concatenate([lp.b_ub, lp.b_eq, -lp.b_eq, lp.hi[hi_rows], -lp.lo[lo_rows]])
    return G, g


def _split_zero_rows(G, g, tol):
    """Drop all-zero rows; report infeasibility if one demands ``0 <= negative``."""
    zero = ~np.any(np.abs(G) > 0.0, axis=1)
    if np.any(g[zero] < -tol.feas_tol):
        return None, None
    return G[~zero], g[~zero]


def _solve_primal(lp, tol, kernel):
    n = lp.n
    # x = x0 + D z, z >= 0
    x0 = np.zeros(n)
    cols = []
    ub_extra = []
    for i in range(n):
        lo, hi = lp.lo[i], lp.hi[i]
        if np.isfinite(lo):
            x0[i] = lo
            cols.append((i, 1.0))
            if np.isfinite(hi):
                ub_extra.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            x0[i] = hi
            cols.append((i, -1.0))
        else:
            cols.append((i, 1.0))
            cols.append((i, -1.0))
    nz = len(cols)
    D = np.zeros((n, nz))
    for k, (i, s) in enumerate(cols):
        D[i, k] = s

    Aub = lp.A_ub @ D
    bub = lp.b_ub - lp.A_ub @ x0
    if ub_extra:
        rows = np.zeros((len(ub_extra), nz))
        for r, (k, width) in enumerate(ub_extra):
            rows[r, k] = 1.0
        Aub = np.vstack([Aub, rows])
        bub = np.concatenate([bub, [w for _, w in ub_extra]])
    Aeq = lp.A_eq @ D
    beq = lp.b_eq - lp.A_eq @ x0

    Aub, bub = _split_zero_rows(Aub, bub, tol)
    if Aub is None:
        return LpResult(Status.INFEASIBLE, route="primal")
    zero_eq = ~np.any(np.abs(Aeq) > 0.0, axis=1)
    if np.any(np.abs(beq[zero_eq]) > tol.feas_tol):
        return LpResult(Status.INFEASIBLE, route="primal")
    Aeq, beq = Aeq[~zero_eq], beq[~zero_eq]
    Aub, bub = _equilibrate(Aub, bub)
    Aeq, beq = _equilibrate(Aeq, beq)

    n_ub, n_eq = Aub.shape[0], Aeq.shape[0]
    m = n_ub + n_eq
    A = np.zeros((m, nz + n_ub))
    A[:n_ub, :nz] = Aub
    A[:n_ub, nz:] = np.eye(n_ub)
    A[n_ub:, :nz] = Aeq
    b = np.concatenate([bub, beq])
    init = np.full(m, -1, dtype=np.int64)
    init[:n_ub] = nz + np.arange(n_ub)
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    init[flip] = -1
    cost = np.concatenate([D.T @ lp.c, np.zeros(n_ub)])

    status, z, _, pivots = _two_phase(A, b, cost, init, tol, kernel)
    if status is not Status.OPTIMAL:
        obj = -np.inf if status is Status.UNBOUNDED else np.nan
        return LpResult(status, objective=obj, pivots=pivots, route="primal")
    x = x0 + D @ z[:nz]
    return LpResult(Status.OPTIMAL, x, float(lp.c @ x), pivots, "primal")


def _solve_dual(lp, tol, kernel):
    """Solve ``min c x, G x <= g`` through ``min g y, G^T y = -c, y >= 0``.

    The primal point solves the rows of ``G`` that are basic in the dual.
    """
    G, g = _inequality_form(lp)
    G, g = _split_zero_rows(G, g, tol)
    if G is None:
        return LpResult(Status.INFEASIBLE, route="dual")
    G, g = _equilibrate(G, g)
    M, n = G.shape
    A = G.T.copy()
    b = -lp.c.copy()
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    status, _, basis, pivots = _two_phase(A, b, g, np.full(n, -1, dtype=np.int64), tol, kernel)
    if status is Status.UNBOUNDED:
        return LpResult(Status.INFEASIBLE, objective=np.nan, pivots=pivots, route="dual")
    if status is Status.INFEASIBLE:
        # primal is infeasible or unbounded; a Farkas certificate tells which
        if _farkas_infeasible(G, g, tol, kernel):
            return LpResult(Status.INFEASIBLE, pivots=pivots, route="dual")
        return LpResult(Status.UNBOUNDED, objective=-np.inf, pivots=pivots, route="dual")
    active = basis[basis < M]
    x, *_ = np.linalg.lstsq(G[active], g[active], rcond=None)
    return LpResult(Status.OPTIMAL, x, float(lp.c @ x), pivots, "dual")


def _farkas_infeasible(G, g, tol, kernel):
    """True iff some ``y >= 0, sum(y) = 1`` has ``G^T y = 0`` and ``g @ y < 0``."""
    M, n = G.shape
    A = np.vstack([G.T, np.ones((1, M))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    status, z, _, _ = _two_phase(A, b, g, np.full(n + 1, -1, dtype=np.int64), tol, kernel)
    return status is Status.OPTIMAL and float(g @ z) < -tol.feas_tol


def _violation(lp, x):
    parts = [np.zeros(1)]
    if lp.A_ub.shape[0]:
        parts.append((lp.A_ub @ x - lp.b_ub) / np.maximum(1.0, np.abs(lp.b_ub)))
    if lp.A_eq.shape[0]:
        parts.append(np.abs(lp.A_eq @ x - lp.b_eq) / np.maximum(1.0, np.abs(lp.b_eq)))
    parts.append(lp.lo - x)
    parts.append(x - lp.hi)
    return float(max(np.max(p) for p in parts))


def choose_route(lp):
    rows = lp.A_ub.shape[0] + 2 * lp.A_eq.shape[0]
    rows += int(np.isfinite(lp.lo).sum() + np.isfinite(lp.hi).sum())
    return "dual" if rows >= 4 * lp.n else "primal"


def solve(lp, route="auto", tol=None, backend=None):
    """Solve ``lp`` and return an :class:`LpResult`.

    Parameters
    ----------
    lp : LinearProgram
    route : {"auto", "primal", "dual"}
        ``auto`` takes the dual route when inequality rows outnumber
        variables four to one.
    tol : Tolerance, optional
    backend : {"compiled", "python"}, optional
        Pivoting kernel; defaults to the one picked at import.

    Optimal points are checked against the original constraints; a
    violation larger than ``feas_tol`` (relative to the offsets) raises
    :class:`NumericalError`. If the dual route's point fails that check the
    primal route is tried before giving up.
    """
    if not isinstance(lp, LinearProgram):
        raise MalformedProgram("expected a LinearProgram")
    tol = tol or default_tolerance()
    kernel = get_kernel(backend)
    if route == "auto":
        route = choose_route(lp)
    if route not in ("primal", "dual"):
        raise ValueError(f"unknown route {route!r}")

    res = _solve_dual(lp, tol, kernel) if route == "dual" else _solve_primal(lp, tol, kernel)
    if res.optimal and _violation(lp, res.x) > tol.feas_tol and route == "dual":
        res = _solve_primal(lp, tol, kernel)
    if res.optimal and _violation(lp, res.x) > tol.feas_tol:
        raise NumericalError(f"LP solution violates constraints by {_violation(lp, res.x):.3g}")
    return res
