"""λ-contractive sets for x+ = A x + B u under x in X, u in U.

The set is computed by the backward recursion

    Ω_0 = X,    Ω_{j+1} = Q_λ(Ω_j) ∩ X,
    Q_λ(D) = {x in X : A x + B u in λ D for some u in U},

and certified by one LP per vertex.
"""
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import polytope as pt
from .errors import DimensionMismatch, EmptyIterate, NotContractive, NumericalError
from .lpsolve import LinearProgram, solve
from .polytope import HPolytope, VPolytope
from .tolerance import default_tolerance

logger = logging.getLogger(__name__)

FALLBACK_CEILING = 1.0 - 1e-6


@dataclass(frozen=True, eq=False)
class SystemModel:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float)).copy()
        B = np.asarray(self.B, dtype=float).copy()
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise DimensionMismatch(f"B has {B.shape[0]} rows, A has {n}")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        rank_tol = default_tolerance().rank_tol
        if np.linalg.matrix_rank(B, tol=rank_tol * max(1.0, np.abs(B).max())) < B.shape[1]:
            warnings.warn("B does not have full column rank", stacklevel=3)
        C = np.hstack([np.linalg.matrix_power(A, k) @ B for k in range(n)])
        sv = np.linalg.svd(C, compute_uv=False)
        if sv[-1] <= rank_tol * sv[0]:
            warnings.warn("(A, B) is not controllable", stacklevel=3)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def step_matrices(self, j_max):
        """Powers ``A^k`` and held-input gains ``sum_{i<=k} A^(i-1) B`` for k = 0..j_max."""
        powers = [np.eye(self.n)]
        gains = [np.zeros((self.n, self.m))]
        for k in range(1, j_max + 1):
            gains.append(gains[-1] + powers[-1] @ self.B)
            powers.append(powers[-1] @ self.A)
        return np.array(powers), np.array(gains)

    def to_json(self):
        return {"A": self.A.tolist(), "B": self.B.tolist()}


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """State and input C-sets, stored normalized (all offsets equal to 1)."""

    X: HPolytope
    U: HPolytope

    def __post_init__(self):
        object.__setattr__(self, "X", pt.normalize(pt.remove_redundancy(self.X)))
        object.__setattr__(self, "U", pt.normalize(pt.remove_redundancy(self.U)))

    def check(self, sys):
        if self.X.dim != sys.n or self.U.dim != sys.m:
            raise DimensionMismatch(
                f"constraints are {self.X.dim}/{self.U.dim}-dimensional, system is {sys.n}/{sys.m}")


@dataclass(frozen=True, eq=False)
class ContractiveSet:
    S: HPolytope
    V: VPolytope
    lambda_target: float
    lambda_certified: float
    iterations_used: int
    worst_factor: float = np.nan

    @property
    def dim(self):
        return self.S.dim

    def gauge(self, x):
        return pt.gauge(self.S, x)

    def to_json(self):
        return {
            "H": self.S.H.tolist(),
            "h": self.S.h.tolist(),
            "vertices": self.V.vertices.tolist(),
            "lambda_target": self.lambda_target,
            "lambda_certified": self.lambda_certified,
            "iterations_used": self.iterations_used,
            "worst_factor": self.worst_factor,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            HPolytope(obj["H"], obj["h"]),
            VPolytope(obj["vertices"]),
            float(obj["lambda_target"]),
            float(obj["lambda_certified"]),
            int(obj["iterations_used"]),
            float(obj.get("worst_factor", np.nan)),
        )


def _as_hpolytope(S):
    return S.S if isinstance(S, ContractiveSet) else S


def preimage(sys, cs, D, lam, tol=None):
    """Q_λ(D): states of X that some u in U sends into λD in one step."""
    tol = tol or default_tolerance()
    cs.check(sys)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    n, m = sys.n, sys.m
    X, U = cs.X, cs.U
    L = np.vstack([
        np.hstack([D.H @ sys.A, D.H @ sys.B]),
        np.hstack([np.zeros((U.n_facets, n)), U.H]),
        np.hstack([X.H, np.zeros((X.n_facets, m))]),
    ])
    ell = np.concatenate([lam * D.h, U.h, X.h])
    return pt.project_eliminate(HPolytope(L, ell), n, tol)


def verify_contractive(sys, cs, S, lam, tol=None, V=None):
    """Certify λ-contractivity of the C-set S at its vertices.

    For each vertex v solves ``min eps s.t. A v + B u in eps*S, u in U``.
    Returns ``(worst <= lam + feas_tol, worst)`` where ``worst`` is the
    largest optimal eps, or ``(False, inf)`` if some vertex has no
    admissible input at all.
    """
    tol = tol or default_tolerance()
    S = _as_hpolytope(S)
    V = pt.vertices(S, tol).vertices if V is None else np.asarray(V)
    m = sys.m
    U = cs.U
    A_ub = np.vstack([
        np.hstack([S.H @ sys.B, -S.h[:, None]]),
        np.hstack([U.H, np.zeros((U.n_facets, 1))]),
    ])
    cost = np.zeros(m + 1)
    cost[-1] = 1.0
    bounds = [(None, None)] * m + [(0.0, None)]
    worst = 0.0
    for v in V:
        b_ub = np.concatenate([-S.H @ sys.A @ v, U.h])
        res = solve(LinearProgram(cost, A_ub, b_ub, bounds=bounds), tol=tol)
        if not res.optimal:
            return False, np.inf
        worst = max(worst, res.x[-1])
    return bool(worst <= lam + tol.feas_tol), float(worst)


def compute_contractive_set(sys, cs, lam, max_iter=100, tol=None):
    """Run the recursion until Ω_{j+1} = Ω_j (mutual containment).

    If ``max_iter`` preimages do not reach a fixed point, the last iterate
    is certified with the smallest factor its vertex LPs admit; that factor
    must stay below ``1 - 1e-6``.

    Raises
    ------
    EmptyIterate
        An iterate is empty or lost the origin from its interior.
    NotContractive
        The fallback certificate is not below one.
    """
    tol = tol or default_tolerance()
    cs.check(sys)
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"lambda must lie in [0, 1), got {lam}")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    X = cs.X
    omega = X
    fixed = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        nxt = pt.intersect(preimage(sys, cs, omega, lam, tol), X, tol)
        if pt.is_empty(nxt, tol):
            raise EmptyIterate(f"iterate {iterations} is empty")
        if np.any(nxt.h <= tol.feas_tol):
            raise EmptyIterate(f"iterate {iterations} lost the origin from its interior")
        if not pt.contains(omega, nxt, tol):
            raise NumericalError(f"iterate {iterations} is not nested in its predecessor")
        logger.info("iteration %d: %d facets", iterations, nxt.n_facets)
        if pt.contains(nxt, omega, tol):
            fixed = True
            omega = nxt
            break
        omega = nxt

    S = pt.normalize(omega, tol)
    V = pt.vertices(S, tol)
    ok, worst = verify_contractive(sys, cs, S, lam, tol, V=V.vertices)
    if fixed and ok:
        certified = lam
    else:
        if fixed:
            logger.warning("fixed point certifies only %.6g > %.6g", worst, lam)
        if not worst <= FALLBACK_CEILING:
            raise NotContractive(f"final iterate is only {worst:.6g}-contractive")
        certified = max(lam, worst)
    return ContractiveSet(S, V, float(lam), float(certified), iterations, float(worst))


def lyapunov_decrease_check(S, x, x_next, rho, tol=None):
    """True iff the gauge of x_next is at most rho times the gauge of x."""
    tol = tol or default_tolerance()
    S = _as_hpolytope(S)
    return pt.gauge(S, x_next, tol) <= rho * pt.gauge(S, x, tol) + tol.feas_tol
