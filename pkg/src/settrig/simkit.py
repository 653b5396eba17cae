"""Plant discretization, closed-loop simulation and run metrics."""
import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import polytope as pt
from .errors import AssumptionViolated
from .invariance import SystemModel
from .tolerance import default_tolerance


@dataclass(frozen=True, eq=False)
class ContinuousModel:
    A_c: np.ndarray
    B_c: np.ndarray
    T: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A_c, dtype=float))
        B = np.asarray(self.B_c, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        if not self.T > 0:
            raise ValueError(f"sampling interval must be positive, got {self.T}")
        object.__setattr__(self, "A_c", A)
        object.__setattr__(self, "B_c", B)


def expm(M):
    """Matrix exponential by scaling and squaring of a Taylor series.

    The argument is scaled to 1-norm at most 1/2, where the series is
    summed until the next term is below machine precision relative to
    the partial sum.
    """
    M = np.asarray(M, dtype=float)
    norm = np.abs(M).sum(axis=0).max() if M.size else 0.0
    s = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    X = M / 2.0 ** s
    E = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, 40):
        term = term @ X / k
        E = E + term
        if np.abs(term).max() <= 1e-17 * max(1.0, np.abs(E).max()):
            break
    for _ in range(s):
        E = E @ E
    return E


def zoh_discretize(cm):
    """Exact zero-order-hold model: exp of [[A_c, B_c], [0, 0]] * T."""
    n, m = cm.B_c.shape
    M = np.zeros((n + m, n + m))
    M[:n, :n] = cm.A_c
    M[:n, n:] = cm.B_c
    E = expm(M * cm.T)
    return SystemModel(E[:n, :n], E[:n, n:])


@dataclass
class Transmission:
    k: int
    j: int
    eps: float
    psi: float


@dataclass
class SimTrace:
    states: np.ndarray
    inputs: np.ndarray
    transmissions: list
    decision_times: list = field(default_factory=list)
    violations: int = 0

    @property
    def horizon(self):
        return len(self.inputs)

    @property
    def instants(self):
        return [t.k for t in self.transmissions]

    def to_csv(self, S=None):
        """Columns k, x_1..x_n, u_1..u_m, is_transmission, j_m, eps_m, psi.

        ``psi`` is the gauge of x(k) when S is given and is left blank
        otherwise; the last row (k = horizon) has no input.
        """
        n, m = self.states.shape[1], self.inputs.shape[1]
        sent = {t.k: t for t in self.transmissions}
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k"] + [f"x_{i + 1}" for i in range(n)] + [f"u_{i + 1}" for i in range(m)]
                   + ["is_transmission", "j_m", "eps_m", "psi"])
        for k, x in enumerate(self.states):
            u = [repr(float(v)) for v in self.inputs[k]] if k < self.horizon else [""] * m
            t = sent.get(k)
            psi = repr(pt.gauge(S.S, x)) if S is not None else ""
            w.writerow([k] + [repr(float(v)) for v in x] + u
                       + [int(t is not None), t.j if t else "", repr(t.eps) if t else "", psi])
        return buf.getvalue()


@dataclass(frozen=True)
class RunMetrics:
    convergence_step: int | None
    transmission_count: int
    constraint_violations: int

    def to_json(self):
        return {"convergence_step": self.convergence_step,
                "transmission_count": self.transmission_count,
                "constraint_violations": self.constraint_violations}


def simulate(controller, sys, cs, S, x0, horizon=200, tol=None):
    """Closed loop with the input held between transmissions.

    ``controller.step(x)`` returns ``(u, j, eps)``; the next transmission
    happens ``j`` steps later. States outside X and inputs outside U are
    counted in ``violations``.
    """
    tol = tol or default_tolerance()
    x = np.asarray(x0, dtype=float).ravel()
    g0 = pt.gauge(S.S, x, tol)
    if g0 > 1.0 + tol.feas_tol:
        raise AssumptionViolated(f"initial state has gauge {g0:.9g} > 1")
    states = np.empty((horizon + 1, sys.n))
    inputs = np.empty((horizon, sys.m))
    states[0] = x
    records, times = [], []
    violations = 0
    u = None
    k_next = 0
    for k in range(horizon):
        if k == k_next:
            t0 = time.perf_counter()
            u, j, eps = controller.step(x)
            times.append(time.perf_counter() - t0)
            u = np.array(u, dtype=float)
            records.append(Transmission(k, int(j), float(eps), pt.gauge(S.S, x, tol)))
            k_next = k + int(j)
            if not pt.membership(cs.U, u, tol):
                violations += 1
        inputs[k] = u
        x = sys.A @ x + sys.B @ u
        states[k + 1] = x
        if not pt.membership(cs.X, x, tol):
            violations += 1
    return SimTrace(states, inputs, records, times, violations)


def metrics(trace, threshold=1e-3, window=100, norm=2):
    """Convergence step (first k with ||x(k)|| <= threshold, else None),
    transmissions with k_m in [0, window] and the violation count."""
    norms = np.linalg.norm(trace.states, ord=norm, axis=1)
    hit = np.flatnonzero(norms <= threshold)
    conv = int(hit[0]) if hit.size else None
    count = sum(1 for t in trace.transmissions if 0 <= t.k <= window)
    return RunMetrics(conv, count, int(trace.violations))


def metrics_json(m):
    return json.dumps(m.to_json(), indent=2, sort_keys=True) + "\n"
