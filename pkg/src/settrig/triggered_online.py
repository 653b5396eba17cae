"""Online self-triggered control.

At a transmission state x the controller solves, for every candidate
interval j, the LP

    min eps  s.t.  A^j' x + G_j' u in X   (j' = 1..j),
                   A^j x + G_j u in eps * Psi_S(x) * S,
                   u in U,  0 <= eps <= lambda,

with ``G_k = sum_{i<=k} A^(i-1) B``, then holds the input of the interval
that maximizes ``w1 (1 - eps)/j + w2 j``.
"""
from dataclasses import dataclass

import numpy as np

from . import polytope as pt
from .errors import EmptyCandidates, StateOutsideSet
from .lpsolve import LinearProgram, solve
from .tolerance import default_tolerance

TIE_TOL = 1e-12


@dataclass(frozen=True)
class OnlineConfig:
    j_max: int = 30
    w1: float = 0.0
    w2: float = 1.0
    exponential_mode: bool = False

    def __post_init__(self):
        if int(self.j_max) != self.j_max or self.j_max < 1:
            raise ValueError(f"j_max must be a positive integer, got {self.j_max}")
        if self.w1 < 0 or self.w2 < 0:
            raise ValueError("weights must be nonnegative")

    def reward(self, eps, j):
        return self.w1 * (1.0 - eps) / j + self.w2 * j


@dataclass(frozen=True)
class IntervalSolution:
    j: int
    u: np.ndarray
    eps: float


class IntervalProgram:
    """Constraint blocks shared by every interval LP for one (sys, cs, S, j_max).

    Rows are stored for the state scaled by its gauge, ``y = x / Psi_S(x)``,
    with the input scaled the same way; this keeps the terminal constraint
    well conditioned as the state approaches the origin.
    """

    def __init__(self, sys, cs, S, j_max, tol=None):
        cs.check(sys)
        self.sys, self.cs, self.S = sys, cs, S
        self.j_max = int(j_max)
        self.tol = tol or default_tolerance()
        self.lam = float(S.lambda_certified)
        HS, HX, HU = S.S.H / S.S.h[:, None], cs.X.H, cs.U.H
        P, G = sys.step_matrices(self.j_max)
        self.P, self.G = P, G
        self.HX_P = np.einsum("rn,knm->krm", HX, P[1:])
        self.HX_G = np.einsum("rn,knm->krm", HX, G[1:])
        self.HS_P = np.einsum("rn,knm->krm", HS, P)
        self.HS_G = np.einsum("rn,knm->krm", HS, G)
        self.HU = HU
        self.HS = HS

    def gauge(self, x):
        return pt.gauge(self.S.S, x, self.tol)

    def lp(self, y, scale, j):
        """Interval-``j`` LP at scaled state ``y`` (one block per row of ``y``).

        Variables are the scaled inputs of each copy followed by a shared eps.
        """
        m = self.sys.m
        Y = np.atleast_2d(y)
        N = Y.shape[0]
        rx, rs, ru = self.HX_G.shape[1] * j, self.HS.shape[0], self.HU.shape[0]
        blk = rx + rs + ru
        A = np.zeros((N * blk, N * m + 1))
        b = np.empty(N * blk)
        gx = self.HX_G[:j].reshape(rx, m)
        for n, yn in enumerate(Y):
            r0, c0 = n * blk, n * m
            A[r0:r0 + rx, c0:c0 + m] = gx
            b[r0:r0 + rx] = 1.0 / scale - (self.HX_P[:j] @ yn).ravel()
            A[r0 + rx:r0 + rx + rs, c0:c0 + m] = self.HS_G[j]
            A[r0 + rx:r0 + rx + rs, -1] = -1.0
            b[r0 + rx:r0 + rx + rs] = -self.HS_P[j] @ yn
            A[r0 + rx + rs:r0 + blk, c0:c0 + m] = self.HU
            b[r0 + rx + rs:r0 + blk] = 1.0 / scale
        cost = np.zeros(N * m + 1)
        cost[-1] = 1.0
        bounds = [(None, None)] * (N * m) + [(0.0, self.lam)]
        return LinearProgram(cost, A, b, bounds=bounds)

    def solve(self, x, j, eps_x=None):
        x = np.asarray(x, dtype=float).ravel()
        if not 1 <= j <= self.j_max:
            raise ValueError(f"interval {j} outside 1..{self.j_max}")
        e = self.gauge(x) if eps_x is None else max(eps_x, self.gauge(x))
        if e == 0.0:
            return IntervalSolution(j, np.zeros(self.sys.m), 0.0)
        res = solve(self.lp(x / e, e, j), tol=self.tol)
        if not res.optimal:
            return None
        return IntervalSolution(j, e * res.x[:-1], float(np.clip(res.x[-1], 0.0, self.lam)))

    def solve_all(self, x):
        e = self.gauge(x)
        out = {}
        for j in range(1, self.j_max + 1):
            sol = self.solve(x, j, eps_x=e)
            if sol is not None:
                out[j] = sol
        return out


def solve_problem1(sys, cs, S, x, j, tol=None):
    """Optimal ``IntervalSolution`` for interval j at state x, or None if infeasible."""
    return IntervalProgram(sys, cs, S, j, tol).solve(x, j)


def feasible_intervals(sys, cs, S, x, cfg, tol=None):
    return sorted(IntervalProgram(sys, cs, S, cfg.j_max, tol).solve_all(x))


def select_interval(solutions, cfg, lam=None, tol=None):
    """Maximize the reward over ``{j: eps}``; ties go to the smallest j.

    In exponential mode only intervals with ``eps <= lam**j`` compete; if
    none qualifies, j = 1 is returned.
    """
    if not solutions:
        raise EmptyCandidates("no feasible interval")
    cand = sorted(solutions)
    if cfg.exponential_mode:
        if lam is None:
            raise ValueError("exponential mode needs the certified lambda")
        slack = (tol or default_tolerance()).feas_tol
        cand = [j for j in cand if solutions[j] <= lam ** j + slack]
        if not cand:
            if 1 not in solutions:
                raise EmptyCandidates("interval 1 is infeasible")
            return 1
    best, best_r = None, 0.0
    for j in cand:
        r = cfg.reward(solutions[j], j)
        if best is None or r > best_r + TIE_TOL * max(1.0, abs(best_r)):
            best, best_r = j, r
    return best


class OnlineController:
    """Stateless decision rule; ``step`` maps a transmission state to (u, j, eps)."""

    def __init__(self, sys, cs, S, cfg, tol=None):
        self.cfg = cfg
        self.program = IntervalProgram(sys, cs, S, cfg.j_max, tol)
        self.tol = self.program.tol

    def step(self, x):
        g = self.program.gauge(x)
        if g > 1.0 + self.tol.feas_tol:
            raise StateOutsideSet(f"state has gauge {g:.9g} > 1")
        sols = self.program.solve_all(x)
        j = select_interval({k: s.eps for k, s in sols.items()}, self.cfg,
                            lam=self.program.lam, tol=self.tol)
        s = sols[j]
        return s.u, j, s.eps


def algorithm1_step(sys, cs, S, x, cfg, tol=None):
    return OnlineController(sys, cs, S, cfg, tol).step(x)
