"""Halfspace polytopes {x : H x <= h} and the operations the invariance
machinery needs: membership, gauge, scaling, intersection, containment,
redundancy removal, vertex enumeration and Fourier-Motzkin projection.

All polytopes are immutable. Every operation takes an optional
:class:`~settrig.tolerance.Tolerance`; the default comes from
:func:`~settrig.tolerance.default_tolerance`.
"""
import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyPolytope, NegativeScale, NotCSet, UnboundedPolytope
from .lpsolve import LinearProgram, Status, solve
from .tolerance import Tolerance, default_tolerance

__all__ = [
    "HPolytope", "VPolytope", "Tolerance", "normalize", "membership", "gauge", "scale",
    "intersect", "contains", "remove_redundancy", "vertices", "project_eliminate",
    "is_empty", "is_bounded", "support",
]

_CHUNK = 100_000


@dataclass(frozen=True, eq=False)
class HPolytope:
    H: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float)
        h = np.atleast_1d(np.asarray(self.h, dtype=float)).ravel()
        if H.ndim == 1 and h.size == 1 and H.size:
            H = H.reshape(1, -1)
        if H.ndim != 2:
            raise DimensionMismatch(f"H must be a matrix, got shape {H.shape}")
        if H.shape[0] != h.size:
            raise DimensionMismatch(f"H has {H.shape[0]} rows but h has {h.size} entries")
        if H.shape[1] == 0:
            raise DimensionMismatch("polytope must have positive dimension")
        if H.shape[0] and np.any(~np.any(H != 0.0, axis=1)):
            raise ValueError("H has an all-zero row")
        H, h = H.copy(), h.copy()
        H.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "h", h)

    @property
    def dim(self):
        return self.H.shape[1]

    @property
    def n_facets(self):
        return self.H.shape[0]

    def __repr__(self):
        return f"HPolytope(dim={self.dim}, facets={self.n_facets})"

    @classmethod
    def box(cls, lower, upper):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        n = lower.size
        return cls(np.vstack([np.eye(n), -np.eye(n)]), np.concatenate([upper, -lower]))

    @classmethod
    def inf_ball(cls, n, radius=1.0):
        return cls.box(-radius * np.ones(n), radius * np.ones(n))

    @classmethod
    def empty(cls, n):
        """A canonical empty set: x_1 <= -1 and -x_1 <= -1."""
        H = np.zeros((2, n))
        H[0, 0], H[1, 0] = 1.0, -1.0
        return cls(H, [-1.0, -1.0])

    def to_json(self):
        return {"H": self.H.tolist(), "h": self.h.tolist()}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        H = np.asarray(obj["H"], dtype=float)
        if H.size == 0:
            H = H.reshape(0, int(obj["dim"]))
        return cls(H, obj["h"])

    def to_text(self):
        """One facet per line: the row of H followed by its offset."""
        lines = [f"# dim {self.dim}"]
        for row, off in zip(self.H, self.h):
            lines.append(" ".join(repr(float(v)) for v in (*row, off)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        rows = []
        dim = None
        for line in text.splitlines():
            line = line.strip()
            if line.startswith("# dim"):
                dim = int(line.split()[2])
            if not line or line.startswith("#"):
                continue
            rows.append([float(v) for v in line.split()])
        if not rows:
            if dim is None:
                raise ValueError("empty polytope text needs a '# dim n' header")
            return cls(np.zeros((0, dim)), np.zeros(0))
        M = np.array(rows)
        return cls(M[:, :-1], M[:, -1])


@dataclass(frozen=True, eq=False)
class VPolytope:
    vertices: np.ndarray

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float)).copy()
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)

    @property
    def dim(self):
        return self.vertices.shape[1]

    def __len__(self):
        return self.vertices.shape[0]

    def __repr__(self):
        return f"VPolytope(dim={self.dim}, vertices={len(self)})"


def _tol(tol):
    return tol or default_tolerance()


def _check_dim(P, n):
    if P.dim != n:
        raise DimensionMismatch(f"dimension {n} does not match polytope dimension {P.dim}")


def support(P, d, tol=None):
    """max d.x over P; +inf if unbounded in d, -inf if P is empty."""
    d = np.asarray(d, dtype=float)
    _check_dim(P, d.size)
    res = solve(LinearProgram(-d, P.H, P.h), tol=_tol(tol))
    if res.status is Status.OPTIMAL:
        return -res.objective
    return np.inf if res.status is Status.UNBOUNDED else -np.inf


def is_empty(P, tol=None):
    if P.n_facets == 0:
        return False
    res = solve(LinearProgram(np.zeros(P.dim), P.H, P.h), tol=_tol(tol))
    return res.status is Status.INFEASIBLE


def is_bounded(P, tol=None):
    """True for bounded (or empty) P; one support query per axis direction."""
    if P.n_facets <= P.dim:
        return is_empty(P, tol)
    eye = np.eye(P.dim)
    return all(np.isfinite(support(P, s * e, tol)) for e in eye for s in (1.0, -1.0))


def normalize(P, tol=None):
    """Rescale rows so every offset is 1. Requires a C-set."""
    tol = _tol(tol)
    if P.n_facets == 0 or np.any(P.h <= tol.feas_tol):
        raise NotCSet("origin is not strictly inside the set")
    if not is_bounded(P, tol):
        raise NotCSet("set is unbounded")
    return HPolytope(P.H / P.h[:, None], np.ones(P.n_facets))


def membership(P, x, tol=None):
    x = np.asarray(x, dtype=float).ravel()
    _check_dim(P, x.size)
    return bool(np.all(P.H @ x <= P.h + _tol(tol).feas_tol))


def gauge(S, x, tol=None):
    """Minkowski function of the C-set S: the smallest mu >= 0 with x in mu*S."""
    x = np.asarray(x, dtype=float).ravel()
    _check_dim(S, x.size)
    if S.n_facets == 0 or np.any(S.h <= _tol(tol).feas_tol):
        raise NotCSet("gauge needs the origin strictly inside the set")
    return max(0.0, float(np.max((S.H @ x) / S.h)))


def scale(S, alpha):
    if alpha < 0:
        raise NegativeScale(f"scale factor {alpha} is negative")
    return HPolytope(S.H, alpha * S.h)


def intersect(P, Q, tol=None):
    """P and Q stacked; an empty result is returned unreduced (check with is_empty)."""
    _check_dim(Q, P.dim)
    R = HPolytope(np.vstack([P.H, Q.H]), np.concatenate([P.h, Q.h]))
    if is_empty(R, tol):
        return R
    return remove_redundancy(R, tol)


def contains(P, Q, tol=None):
    """True iff Q is a subset of P (one support LP over Q per facet of P)."""
    tol = _tol(tol)
    _check_dim(Q, P.dim)
    if is_empty(Q, tol):
        return True
    return all(support(Q, row, tol) <= off + tol.feas_tol for row, off in zip(P.H, P.h))


def _dedupe_rows(H, h, tol):
    """Merge rows pointing the same way (after unit scaling), keeping the tightest."""
    norms = np.linalg.norm(H, axis=1)
    U = H / norms[:, None]
    u = h / norms
    order = np.lexsort((u,) + tuple(U.T[::-1]))
    keep = []
    for i in order:
        if keep:
            close = np.max(np.abs(U[keep] - U[i]), axis=1) <= tol.rank_tol
            if np.any(close):
                k = keep[int(np.flatnonzero(close)[0])]
                if u[i] < u[k]:
                    keep[keep.index(k)] = i
                continue
        keep.append(i)
    return np.sort(np.array(keep, dtype=int))


def remove_redundancy(P, tol=None):
    """Drop every facet whose removal leaves the point set unchanged.

    Rows are tested in order against the rows still kept; a row is dropped
    when the LP maximum of its normal over the others (with the row itself
    loosened by one unit to keep the program bounded) stays within
    ``feas_tol`` of its offset.
    """
    tol = _tol(tol)
    if P.n_facets <= 1 or is_empty(P, tol):
        return P
    idx = _dedupe_rows(P.H, P.h, tol)
    H, h = P.H[idx], P.h[idx]
    norms = np.linalg.norm(H, axis=1)
    U, u = H / norms[:, None], h / norms
    keep = np.ones(len(idx), dtype=bool)
    for i in range(len(idx)):
        others = keep.copy()
        others[i] = False
        G = np.vstack([U[others], U[i]])
        g = np.append(u[others], u[i] + 1.0)
        res = solve(LinearProgram(-U[i], G, g), tol=tol)
        if res.status is Status.OPTIMAL and -res.objective <= u[i] + tol.feas_tol:
            keep[i] = False
    return HPolytope(H[keep], h[keep])


def _combination_vertices(U, u, tol):
    m, d = U.shape
    found = []
    combos = itertools.combinations(range(m), d)
    while True:
        chunk = np.array(list(itertools.islice(combos, _CHUNK)), dtype=np.intp)
        if chunk.size == 0:
            break
        M = U[chunk]
        sv = np.linalg.svd(M, compute_uv=False)
        ok = sv[:, -1] > tol.rank_tol * sv[:, 0]
        if not np.any(ok):
            continue
        X = np.linalg.solve(M[ok], u[chunk[ok]][..., None])[..., 0]
        feas = np.all(X @ U.T <= u + tol.feas_tol, axis=1)
        found.append(X[feas])
    if not found:
        return np.zeros((0, d))
    X = np.vstack(found)
    X = X[np.lexsort(X.T[::-1])]
    out = []
    for x in X:
        if not out or np.min(np.max(np.abs(np.asarray(out) - x), axis=1)) > tol.feas_tol:
            out.append(x)
    return np.array(out).reshape(-1, d) + 0.0


def vertices(P, tol=None):
    """All extreme points, by solving every d-subset of facets.

    Candidates whose subsystem is singular (smallest singular value below
    ``rank_tol`` relative to the largest) are skipped; infeasible ones are
    discarded and the rest deduplicated within ``feas_tol``.
    """
    tol = _tol(tol)
    if is_empty(P, tol):
        raise EmptyPolytope("cannot enumerate vertices of an empty set")
    if not is_bounded(P, tol):
        raise UnboundedPolytope("cannot enumerate vertices of an unbounded set")
    R = remove_redundancy(P, tol)
    norms = np.linalg.norm(R.H, axis=1)
    V = _combination_vertices(R.H / norms[:, None], R.h / norms, tol)
    return VPolytope(V)


def _fm_step(H, h, tol):
    """Eliminate the last coordinate. Returns None if the result is empty."""
    c = H[:, -1]
    scale_ = np.linalg.norm(H, axis=1)
    pos = np.flatnonzero(c > tol.rank_tol * scale_)
    neg = np.flatnonzero(c < -tol.rank_tol * scale_)
    zero = np.setdiff1d(np.arange(H.shape[0]), np.concatenate([pos, neg]))
    rows = [H[zero, :-1]]
    offs = [h[zero]]
    if pos.size and neg.size:
        Pn = H[pos] / c[pos, None]
        pn = h[pos] / c[pos]
        Nn = H[neg] / -c[neg, None]
        nn = h[neg] / -c[neg]
        rows.append((Pn[:, None, :-1] + Nn[None, :, :-1]).reshape(-1, H.shape[1] - 1))
        offs.append((pn[:, None] + nn[None, :]).ravel())
    G = np.vstack(rows)
    g = np.concatenate(offs)
    tiny = np.max(np.abs(G), axis=1) <= tol.rank_tol if G.size else np.zeros(0, dtype=bool)
    if np.any(g[tiny] < -tol.feas_tol):
        return None
    return G[~tiny], g[~tiny]


def project_eliminate(P, keep, tol=None):
    """Shadow of P on its first ``keep`` coordinates (Fourier-Motzkin).

    Redundant rows are removed after each eliminated coordinate.
    """
    tol = _tol(tol)
    if not 1 <= keep <= P.dim:
        raise DimensionMismatch(f"cannot keep {keep} of {P.dim} coordinates")
    if is_empty(P, tol):
        return HPolytope.empty(keep)
    H, h = P.H, P.h
    for _ in range(P.dim - keep):
        step = _fm_step(H, h, tol)
        if step is None:
            return HPolytope.empty(keep)
        H, h = step
        if H.shape[0] == 0:
            return HPolytope(np.zeros((0, H.shape[1])), np.zeros(0))
        R = remove_redundancy(HPolytope(H, h), tol)
        H, h = R.H, R.h
    return HPolytope(H, h)
