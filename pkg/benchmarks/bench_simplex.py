"""Compare the compiled and pure-Python pivoting kernels.

Two workloads: random dense LPs solved directly, and the Problem 1 step
of the online controller on the batch reactor (which is what dominates a
closed-loop run). Run with ``python benchmarks/bench_simplex.py``.
"""
import argparse
import time
from pathlib import Path

import numpy as np

from settrig import _kernels
from settrig.cli import ExperimentConfig
from settrig.invariance import compute_contractive_set
from settrig.lpsolve import LinearProgram, solve
from settrig.triggered_online import IntervalProgram

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "batch_reactor.json"


def random_programs(rng, count, n, m):
    out = []
    for _ in range(count):
        A = rng.normal(size=(m, n))
        b = rng.uniform(0.5, 2.0, size=m)
        out.append(LinearProgram(rng.normal(size=n), A, b, bounds=[(-5, 5)] * n))
    return out


def timed(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_random(backends, repeat, rng):
    for n, m in [(4, 20), (10, 60), (30, 150)]:
        lps = random_programs(rng, 50, n, m)
        row = {b: timed(lambda: [solve(lp, backend=b) for lp in lps], repeat) / len(lps) for b in backends}
        yield f"random n={n} m={m}", row


def bench_reactor(backends, repeat, rng, states):
    cfg = ExperimentConfig.load(CONFIG)
    S = compute_contractive_set(cfg.system, cfg.constraints, cfg.lam, cfg.max_iter)
    prog = IntervalProgram(cfg.system, cfg.constraints, S, cfg.j_max)
    w = rng.dirichlet(np.ones(len(S.V)), size=states)
    xs = w @ S.V.vertices
    saved = _kernels.BACKEND
    row = {}
    try:
        for b in backends:
            _kernels.BACKEND = b
            row[b] = timed(lambda: [prog.solve_all(x) for x in xs], repeat) / (states * cfg.j_max)
    finally:
        _kernels.BACKEND = saved
    yield f"reactor problem 1 (j_max={cfg.j_max})", row


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--states", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip-reactor", action="store_true")
    args = ap.parse_args(argv)

    backends = sorted(_kernels.KERNELS)
    if "compiled" not in backends:
        print("compiled kernel not built; timing the Python kernel only")
    rng = np.random.default_rng(args.seed)
    rows = list(bench_random(backends, args.repeat, rng))
    if not args.skip_reactor:
        rows += list(bench_reactor(backends, args.repeat, rng, args.states))

    print(f"{'workload':<34}" + "".join(f"{b + ' ms/LP':>16}" for b in backends) + f"{'speedup':>10}")
    for name, row in rows:
        line = f"{name:<34}" + "".join(f"{row[b] * 1e3:>16.3f}" for b in backends)
        if "compiled" in row:
            line += f"{row['python'] / row['compiled']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
