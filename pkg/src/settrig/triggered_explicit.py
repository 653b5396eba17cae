"""Explicit self-triggered control.

Offline, the contractive set S is cut into shells
``S_1 = rho_1 S`` and ``S_l = rho_l S minus rho_(l-1) S``. For each shell
and interval j the vertex program

    min eps  s.t.  for every vertex v_n of S, with w_n = rho_l v_n:
                   A^j' w_n + G_j' u_n in X   (j' = 1..j),
                   A^j w_n + G_j u_n in eps * rho_l * S,
                   u_n in U,  0 <= eps <= lambda

is solved and the interval with the best reward is stored. Online, a state
x in shell l with x = Psi_S(x) * sum_n c_n v_n receives
``u = (Psi_S(x) / rho_l) * sum_n c_n u_n``, held for the stored interval.

The joint program decouples across vertices once eps is fixed, so it is
solved one vertex at a time: the shared optimum is the largest per-vertex
optimum and each per-vertex input stays feasible at that value.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import polytope as pt
from .errors import DecompositionFailed, EmptyCandidates, StateOutsideSet
from .invariance import ContractiveSet
from .lpsolve import LinearProgram, solve
from .tolerance import default_tolerance
from .triggered_online import IntervalProgram, select_interval

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShellDecomposition:
    rho: tuple

    def __post_init__(self):
        rho = tuple(float(r) for r in self.rho)
        if not rho:
            raise ValueError("at least one shell is required")
        if rho[-1] != 1.0:
            raise ValueError("the outermost radius must be exactly 1")
        if rho[0] <= 0.0 or any(b <= a for a, b in zip(rho, rho[1:])):
            raise ValueError("radii must be positive and strictly increasing")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def uniform(cls, L):
        return cls(tuple(ell / L for ell in range(1, L + 1)))

    @property
    def L(self):
        return len(self.rho)


@dataclass(frozen=True)
class ShellSolution:
    ell: int
    j: int
    eps: float
    u_per_vertex: np.ndarray

    def to_json(self):
        return {"ell": self.ell, "j": self.j, "eps": self.eps,
                "u_per_vertex": np.asarray(self.u_per_vertex).tolist()}

    @classmethod
    def from_json(cls, obj):
        return cls(int(obj["ell"]), int(obj["j"]), float(obj["eps"]),
                   np.asarray(obj["u_per_vertex"], dtype=float))


@dataclass(frozen=True, eq=False)
class ExplicitMap:
    decomposition: ShellDecomposition
    j_star: tuple
    solutions: tuple
    S: ContractiveSet
    # per shell: {j: eps*} over the feasible intervals J_l
    candidates: tuple = ()

    @property
    def rho(self):
        return self.decomposition.rho

    def table(self):
        """One row per shell: (l, rho_l, J_l, j*_l, eps*_(l, j*_l))."""
        rows = []
        for ell, (r, j, sol) in enumerate(zip(self.rho, self.j_star, self.solutions), start=1):
            J = sorted(self.candidates[ell - 1]) if self.candidates else []
            rows.append({"ell": ell, "rho": r, "J": J, "j_star": j, "eps": sol.eps})
        return rows

    def to_json(self):
        return {
            "rho": list(self.rho),
            "j_star": list(self.j_star),
            "solutions": [s.to_json() for s in self.solutions],
            "candidates": [{str(j): e for j, e in sorted(c.items())} for c in self.candidates],
            "contractive_set": self.S.to_json(),
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            ShellDecomposition(tuple(obj["rho"])),
            tuple(int(j) for j in obj["j_star"]),
            tuple(ShellSolution.from_json(s) for s in obj["solutions"]),
            ContractiveSet.from_json(obj["contractive_set"]),
            tuple({int(j): float(e) for j, e in c.items()} for c in obj.get("candidates", [])),
        )


def solve_problem2(sys, cs, S, rho, j, tol=None, program=None, joint=False):
    """Vertex program for shell radius ``rho`` and interval ``j``.

    Returns a ShellSolution with ``ell = 0`` (the caller assigns the shell
    index), or None if some vertex has no admissible input. ``joint=True``
    solves the single coupled LP instead of the per-vertex split.
    """
    tol = tol or default_tolerance()
    prog = program or IntervalProgram(sys, cs, S, j, tol)
    V = S.V.vertices
    if joint:
        res = solve(prog.lp(V, rho, j), tol=tol)
        if not res.optimal:
            return None
        U = rho * res.x[:-1].reshape(len(V), sys.m)
        return ShellSolution(0, j, float(np.clip(res.x[-1], 0.0, prog.lam)), U)
    U = np.empty((len(V), sys.m))
    eps = 0.0
    for n, v in enumerate(V):
        sol = prog.solve(rho * v, j, eps_x=rho)
        if sol is None:
            return None
        U[n] = sol.u
        eps = max(eps, sol.eps)
    return ShellSolution(0, j, eps, U)


def feasible_intervals_shell(sys, cs, S, rho, j_max, tol=None):
    prog = IntervalProgram(sys, cs, S, j_max, tol)
    return [j for j in range(1, j_max + 1)
            if solve_problem2(sys, cs, S, rho, j, tol, program=prog) is not None]


def _solve_shell(args):
    sys, cs, S, rho, j_max, tol = args
    prog = IntervalProgram(sys, cs, S, j_max, tol)
    out = {}
    for j in range(1, j_max + 1):
        sol = solve_problem2(sys, cs, S, rho, j, tol, program=prog)
        if sol is not None:
            out[j] = sol
    return out


def build_explicit_map(sys, cs, S, rho, cfg, tol=None, workers=1):
    """Solve every (shell, interval) program and pick j*_l by the reward.

    ``rho`` is a ShellDecomposition or a sequence of radii. Shells are
    independent and are spread over ``workers`` processes when > 1.
    """
    tol = tol or default_tolerance()
    dec = rho if isinstance(rho, ShellDecomposition) else ShellDecomposition(tuple(rho))
    jobs = [(sys, cs, S, r, cfg.j_max, tol) for r in dec.rho]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            per_shell = list(ex.map(_solve_shell, jobs))
    else:
        per_shell = [_solve_shell(job) for job in jobs]

    j_star, sols, cands = [], [], []
    for ell, table in enumerate(per_shell, start=1):
        if not table:
            raise EmptyCandidates(f"shell {ell} has no feasible interval")
        eps = {j: s.eps for j, s in table.items()}
        j = select_interval(eps, cfg, lam=S.lambda_certified, tol=tol)
        s = table[j]
        j_star.append(j)
        sols.append(ShellSolution(ell, j, s.eps, s.u_per_vertex))
        cands.append(eps)
        logger.info("shell %d: J=%s j*=%d eps=%.4g", ell, sorted(eps), j, s.eps)
    return ExplicitMap(dec, tuple(j_star), tuple(sols), S, tuple(cands))


def point_locate(emap, x, tol=None):
    """1-based index of the shell containing x (outer boundaries are closed)."""
    tol = tol or default_tolerance()
    g = pt.gauge(emap.S.S, x, tol)
    if g > 1.0 + tol.feas_tol:
        raise StateOutsideSet(f"state has gauge {g:.9g} > 1")
    for ell, r in enumerate(emap.rho, start=1):
        if g <= r + tol.feas_tol:
            return ell
    return emap.decomposition.L


def convex_coefficients(S, y, tol=None):
    """Nonnegative weights c with sum(c) = 1 and sum_n c_n v_n = y.

    Found by a feasibility LP, so the choice among the (generally many)
    valid decompositions is deterministic.
    """
    tol = tol or default_tolerance()
    V = S.V.vertices
    y = np.asarray(y, dtype=float).ravel()
    A_eq = np.vstack([V.T, np.ones(len(V))])
    b_eq = np.append(y, 1.0)
    res = solve(LinearProgram(np.zeros(len(V)), A_eq=A_eq, b_eq=b_eq, bounds=(0.0, None)), tol=tol)
    if not res.optimal:
        raise DecompositionFailed("point is not a convex combination of the vertices")
    c = np.maximum(res.x, 0.0)
    if np.max(np.abs(A_eq @ c - b_eq)) > tol.feas_tol * max(1.0, np.abs(V).max()):
        raise DecompositionFailed("convex combination residual above tolerance")
    return c


class ExplicitController:
    """Table lookup plus interpolation; ``step`` maps x to (u, j, eps*)."""

    def __init__(self, emap, tol=None):
        self.emap = emap
        self.tol = tol or default_tolerance()
        self.m = emap.solutions[0].u_per_vertex.shape[1]

    def step(self, x):
        x = np.asarray(x, dtype=float).ravel()
        ell = point_locate(self.emap, x, self.tol)
        j = self.emap.j_star[ell - 1]
        sol = self.emap.solutions[ell - 1]
        e = pt.gauge(self.emap.S.S, x, self.tol)
        if e == 0.0:
            return np.zeros(self.m), self.emap.j_star[0], 0.0
        c = convex_coefficients(self.emap.S, x / e, self.tol)
        u = (e / self.emap.rho[ell - 1]) * (c @ sol.u_per_vertex)
        return u, j, sol.eps


def algorithm2_step(emap, x, tol=None):
    u, j, _ = ExplicitController(emap, tol).step(x)
    return u, j
