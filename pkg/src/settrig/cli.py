"""Command line front end.

    settrig contract     --config C [--out DIR]
    settrig explicit-map --config C [--out DIR]
    settrig simulate     --config C [--out DIR] [--algorithm {1,2}]
    settrig sweep        --config C [--out DIR] [--algorithm {1,2}] [--workers N]
    settrig verify       --config C [--out DIR]

Artifacts produced by one command (the contractive set, explicit maps) are
written to the output directory and reused by later commands. Exit codes:
0 success, 2 infeasible problem or violated assumption, 3 numerical failure.
"""
import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import polytope as pt
from .errors import AssumptionViolated, SettrigError
from .invariance import ConstraintSet, ContractiveSet, SystemModel, compute_contractive_set, verify_contractive
from .polytope import HPolytope
from .simkit import ContinuousModel, metrics, metrics_json, simulate, zoh_discretize
from .tolerance import default_tolerance
from .triggered_explicit import (ExplicitController, ExplicitMap, ShellDecomposition, build_explicit_map,
                                 point_locate, solve_problem2)
from .triggered_online import IntervalProgram, OnlineConfig, OnlineController

logger = logging.getLogger("settrig")

SET_FILE = "contractive_set.json"


class ConfigError(SettrigError):
    pass


def _polytope(spec, dim, name):
    if "inf_norm_bound" in spec:
        return HPolytope.inf_ball(dim, float(spec["inf_norm_bound"]))
    if "lower" in spec and "upper" in spec:
        return HPolytope.box(spec["lower"], spec["upper"])
    if "H" in spec and "h" in spec:
        return HPolytope(spec["H"], spec["h"])
    raise ConfigError(f"{name}: expected inf_norm_bound, lower/upper or H/h")


@dataclass
class ExperimentConfig:
    system: SystemModel
    constraints: ConstraintSet
    lam: float = 0.99
    max_iter: int = 100
    j_max: int = 30
    weights: tuple = (0.0, 1.0)
    exponential_mode: bool = False
    rho: tuple = ShellDecomposition.uniform(10).rho
    x0: np.ndarray = None
    horizon: int = 200
    seed: int = 0
    output_dir: str = "out"
    sweep_weights: list = field(default_factory=list)
    convergence_threshold: float = 1e-3
    transmission_window: int = 100
    convergence_norm: float = 2
    verify_samples: int = 20

    def online(self, weights=None):
        w1, w2 = self.weights if weights is None else weights
        return OnlineConfig(self.j_max, float(w1), float(w2), self.exponential_mode)

    @classmethod
    def from_dict(cls, d):
        try:
            sysd = d["system"]
            if "continuous" in sysd:
                c = sysd["continuous"]
                model = zoh_discretize(ContinuousModel(c["A"], c["B"], float(c["T"])))
            elif "discrete" in sysd:
                model = SystemModel(sysd["discrete"]["A"], sysd["discrete"]["B"])
            else:
                raise ConfigError("system: expected 'continuous' or 'discrete'")
            X = _polytope(d["constraints"]["X"], model.n, "X")
            U = _polytope(d["constraints"]["U"], model.m, "U")
            cs = ConstraintSet(X, U)
            if "rho" in d:
                rho = ShellDecomposition(tuple(d["rho"])).rho
            else:
                rho = ShellDecomposition.uniform(int(d.get("L", 10))).rho
            x0 = np.asarray(d.get("x0", np.zeros(model.n)), dtype=float).ravel()
            if x0.size != model.n:
                raise ConfigError(f"x0 has {x0.size} entries, the state has {model.n}")
            conv = d.get("convergence", {})
            cfg = cls(
                system=model, constraints=cs,
                lam=float(d.get("lambda", 0.99)),
                max_iter=int(d.get("max_iter", 100)),
                j_max=int(d.get("j_max", 30)),
                weights=tuple(float(w) for w in d.get("weights", (0.0, 1.0))),
                exponential_mode=bool(d.get("exponential_mode", False)),
                rho=rho, x0=x0,
                horizon=int(d.get("horizon", 200)),
                seed=int(d.get("seed", 0)),
                output_dir=str(d.get("output_dir", "out")),
                sweep_weights=[tuple(float(v) for v in w) for w in d.get("sweep_weights", [])],
                convergence_threshold=float(conv.get("threshold", 1e-3)),
                transmission_window=int(conv.get("window", 100)),
                convergence_norm=float(conv.get("norm", 2)),
                verify_samples=int(d.get("verify_samples", 20)),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed config: {exc!r}") from None
        except ValueError as exc:
            if isinstance(exc, SettrigError):
                raise
            raise ConfigError(str(exc)) from None
        if len(cfg.weights) != 2 or any(len(w) != 2 for w in cfg.sweep_weights):
            raise ConfigError("weights are (w1, w2) pairs")
        if not 0.0 <= cfg.lam < 1.0:
            raise ConfigError("lambda must lie in [0, 1)")
        try:
            cfg.online()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return cfg

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _write_json(path, obj):
    _write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _tag(weights):
    return "w1_{:g}_w2_{:g}".format(*weights)


def load_or_compute_set(cfg, out):
    path = out / SET_FILE
    if path.exists():
        return ContractiveSet.from_json(json.loads(path.read_text()))
    return cmd_contract(cfg, out)


def cmd_contract(cfg, out):
    S = compute_contractive_set(cfg.system, cfg.constraints, cfg.lam, cfg.max_iter)
    _write_json(out / SET_FILE, S.to_json())
    _write_json(out / "contract_report.json", {
        "lambda_target": S.lambda_target,
        "lambda_certified": S.lambda_certified,
        "worst_factor": S.worst_factor,
        "iterations_used": S.iterations_used,
        "n_facets": S.S.n_facets,
        "n_vertices": len(S.V),
    })
    return S


def _map_settings(cfg, weights):
    return {"j_max": cfg.j_max, "w1": weights[0], "w2": weights[1],
            "exponential_mode": cfg.exponential_mode, "rho": list(cfg.rho)}


def shell_table_csv(emap):
    rows = [["ell", "rho", "J", "j_star", "eps"]]
    for r in emap.table():
        rows.append([r["ell"], repr(r["rho"]), " ".join(map(str, r["J"])), r["j_star"], repr(r["eps"])])
    return "".join(",".join(str(c) for c in row) + "\n" for row in rows)


def load_or_build_map(cfg, out, S, weights, workers=1):
    path = out / f"explicit_map_{_tag(weights)}.json"
    if path.exists():
        obj = json.loads(path.read_text())
        if obj.get("settings") == _map_settings(cfg, weights):
            return ExplicitMap.from_json(obj)
    emap = build_explicit_map(cfg.system, cfg.constraints, S, cfg.rho, cfg.online(weights),
                              workers=workers)
    obj = emap.to_json()
    obj["settings"] = _map_settings(cfg, weights)
    _write_json(path, obj)
    _write(out / f"shell_table_{_tag(weights)}.csv", shell_table_csv(emap))
    return emap


def cmd_explicit_map(cfg, out, workers=1):
    S = load_or_compute_set(cfg, out)
    return load_or_build_map(cfg, out, S, cfg.weights, workers)


def run_one(cfg, out, S, algorithm, weights, workers=1):
    """One closed-loop run; writes trace.csv and metrics.json under ``out``."""
    if algorithm == 1:
        ctrl = OnlineController(cfg.system, cfg.constraints, S, cfg.online(weights))
    else:
        ctrl = ExplicitController(load_or_build_map(cfg, out, S, weights, workers))
    trace = simulate(ctrl, cfg.system, cfg.constraints, S, cfg.x0, cfg.horizon)
    m = metrics(trace, cfg.convergence_threshold, cfg.transmission_window, cfg.convergence_norm)
    stem = f"alg{algorithm}_{_tag(weights)}"
    _write(out / f"trace_{stem}.csv", trace.to_csv(S))
    _write(out / f"metrics_{stem}.json", metrics_json(m))
    return m


def cmd_simulate(cfg, out, algorithm, workers=1):
    S = load_or_compute_set(cfg, out)
    if pt.gauge(S.S, cfg.x0) > 1.0 + default_tolerance().feas_tol:
        raise AssumptionViolated("x0 lies outside the contractive set")
    return run_one(cfg, out, S, algorithm, cfg.weights, workers)


def _sweep_entry(args):
    cfg, out, S, algorithm, weights = args
    entry = out / "sweep" / f"alg{algorithm}_{_tag(weights)}"
    m = run_one(cfg, entry, S, algorithm, weights)
    return weights, m


def cmd_sweep(cfg, out, algorithm, workers=1):
    if not cfg.sweep_weights:
        raise ConfigError("sweep_weights is empty")
    S = load_or_compute_set(cfg, out)
    jobs = [(cfg, out, S, algorithm, w) for w in cfg.sweep_weights]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_entry, jobs))
    else:
        results = [_sweep_entry(j) for j in jobs]
    lines = ["algorithm,w1,w2,convergence_step,transmission_count,constraint_violations"]
    for (w1, w2), m in results:
        conv = "" if m.convergence_step is None else m.convergence_step
        lines.append(f"{algorithm},{w1:g},{w2:g},{conv},{m.transmission_count},{m.constraint_violations}")
    _write(out / f"sweep_alg{algorithm}.csv", "\n".join(lines) + "\n")
    return results


def certificate_violations(cfg, emap, rng, samples, tol):
    """Sample states per shell and check the interpolated input's guarantees."""
    sys_, cs, S = cfg.system, cfg.constraints, emap.S
    V = S.V.vertices
    P, G = sys_.step_matrices(max(emap.j_star))
    ctrl = ExplicitController(emap, tol)
    bad = 0
    rho = (0.0,) + emap.rho
    for ell in range(1, len(rho)):
        for _ in range(samples):
            w = rng.dirichlet(np.full(len(V), 0.5))
            g = rng.uniform(rho[ell - 1], rho[ell])
            y = w @ V
            x = g * y / pt.gauge(S.S, y)
            if point_locate(emap, x, tol) != ell:
                continue
            u, j, eps = ctrl.step(x)
            ok = pt.membership(cs.U, u, tol)
            for k in range(1, j + 1):
                ok &= pt.membership(cs.X, P[k] @ x + G[k] @ u, tol)
            ok &= pt.gauge(S.S, P[j] @ x + G[j] @ u) <= eps * pt.gauge(S.S, x) + tol.feas_tol
            bad += not ok
    return bad


def cmd_verify(cfg, out):
    tol = default_tolerance()
    path = out / SET_FILE
    if not path.exists():
        raise ConfigError(f"{path} not found; run 'contract' first")
    S = ContractiveSet.from_json(json.loads(path.read_text()))
    ok_set, worst = verify_contractive(cfg.system, cfg.constraints, S, S.lambda_certified, tol)
    inside = pt.contains(cfg.constraints.X, S.S, tol)
    report = {"contractive_set": {"certified": ok_set, "worst_factor": worst,
                                  "lambda_certified": S.lambda_certified, "inside_X": inside}}
    passed = ok_set and inside
    rng = np.random.default_rng(cfg.seed)
    for path in sorted(out.glob("explicit_map_*.json")):
        emap = ExplicitMap.from_json(json.loads(path.read_text()))
        prog = IntervalProgram(cfg.system, cfg.constraints, emap.S, max(emap.j_star), tol)
        shells = []
        for r, j, sol in zip(emap.rho, emap.j_star, emap.solutions):
            re = solve_problem2(cfg.system, cfg.constraints, emap.S, r, j, tol, program=prog)
            shells.append(re is not None and re.eps <= sol.eps + tol.feas_tol)
        bad = certificate_violations(cfg, emap, rng, cfg.verify_samples, tol)
        report[path.name] = {"shells_feasible": shells, "certificate_violations": bad}
        passed &= all(shells) and bad == 0
    report["passed"] = bool(passed)
    _write_json(out / "verify_report.json", report)
    return passed


def build_parser():
    p = argparse.ArgumentParser(prog="settrig", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("contract", "explicit-map", "simulate", "sweep", "verify"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path)
        s.add_argument("--out", type=Path, default=None)
        s.add_argument("--algorithm", type=int, choices=(1, 2), default=1)
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = None
    try:
        cfg = ExperimentConfig.load(args.config)
        out = args.out or Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "contract":
            S = cmd_contract(cfg, out)
            print(f"lambda_certified={S.lambda_certified:g} facets={S.S.n_facets} "
                  f"vertices={len(S.V)} worst_factor={S.worst_factor:.6g}")
        elif args.command == "explicit-map":
            emap = cmd_explicit_map(cfg, out, args.workers)
            print(shell_table_csv(emap), end="")
        elif args.command == "simulate":
            m = cmd_simulate(cfg, out, args.algorithm, args.workers)
            print(metrics_json(m), end="")
        elif args.command == "sweep":
            cmd_sweep(cfg, out, args.algorithm, args.workers)
            print((out / f"sweep_alg{args.algorithm}.csv").read_text(), end="")
        elif args.command == "verify":
            passed = cmd_verify(cfg, out)
            print("verify: " + ("PASS" if passed else "FAIL"))
            return 0 if passed else 2
    except (SettrigError, OSError, json.JSONDecodeError) as exc:
        code = getattr(exc, "exit_code", 2)
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        print(json.dumps(err), file=sys.stderr)
        if out is not None:
            _write_json(out / "error.json", err)
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
