"""Command-line front end: ``composolve {gen,solve,verify,bench}``.

Exit codes: 0 success, 2 usage or configuration error, 3 non-convergence,
4 verification failure.
"""

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .agd import AgdSpec, agd
from .baselines import SingleLoopConfig, run_single_loop
from .cvx import AppaConfig, PerturbConfig, solve_c_appa, solve_c_perturb
from .errors import DivergenceError, NonConvergenceError
from .instances import (ScChainInstance, kkt_solve, make_c_instance, make_nc_instance,
                        make_sc_instance, random_equality_qp)
from .io import load_problem, save_problem
from .measures import subopt_c
from .nc import NcConfig, solve_nc
from .oracles import Oracles
from .sc import ScConfig, solve_sc
from .trace import COUNTER_COLUMNS, SCHEMA_VERSION, IterateTrace, SolverReport
from .verify import INJECTIONS, run_checks

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGENCE, EXIT_VERIFY = 0, 2, 3, 4
ALGS = ("agd", "sc", "nc", "c-perturb", "c-appa", "appa", "cp", "ogda", "lalm")
GEN_KINDS = ("chain_sc", "chain_c", "chain_nc", "qp")
_LOOP = {"cp": "chambolle_pock", "ogda": "ogda", "lalm": "linearized_alm"}
# sweepable keys and their types; generator keys first, then solver keys
SWEEP_KEYS = {"kappa_A": float, "kappa_f": float, "k_budget": int, "L_f": float, "D": float,
              "Delta": float, "n": int, "m": int, "seed": int, "eps": float, "rho": float, "T": int}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# instances


def generate(kind, p):
    """Build ``(problem, x0)`` for a generator kind and a parameter dict."""
    L_f, D = p["L_f"], p["D"]
    if kind == "chain_sc":
        _, prob = make_sc_instance(L_f, L_f / p["kappa_f"], p["kappa_A"], p["k_budget"], D)
    elif kind == "chain_c":
        _, prob = make_c_instance(L_f, p["kappa_A"], p["k_budget"], D)
    elif kind == "chain_nc":
        _, prob = make_nc_instance(L_f, p["Delta"], p["kappa_A"], p["k_budget"])
    elif kind == "qp":
        prob, _, _ = random_equality_qp(p["n"], p["m"], seed=p["seed"], strongly_convex=True)
    else:
        raise UsageError(f"unknown instance kind {kind!r}; choose from {GEN_KINDS}")
    return prob, np.zeros(prob.n)


def reference(problem):
    """``(x*, lambda*, F*)`` when available in closed form or by a KKT solve, else Nones."""
    inst = problem.meta.get("instance")
    if isinstance(inst, ScChainInstance):
        return inst.closed_form_optimum(), inst.dual_optimum(), inst.optimal_value()
    if problem.f.name == "quadratic" and problem.h.kind == "indicator_zero" and problem.A.kind == "dense":
        Q, c = problem.f.params["Q"], problem.f.params["c"]
        xs, ls = kkt_solve(Q, c, problem.A.matrix, problem.b)
        return xs, ls, problem.f.value(xs)
    return None, None, None


# ---------------------------------------------------------------------------
# solving


def run_alg(problem, x0, alg, eps, rho=None, T=None):
    """Run one algorithm; returns ``(report, trace, metrics)``.

    ``metrics`` always holds ``accuracy_name``, ``accuracy`` and
    ``within_tolerance`` (None when no reference is known).
    """
    xs, ls, Fs = reference(problem)
    ref = None if xs is None else (xs, ls)
    D = float(problem.meta.get("D", 0)) or None
    ora = Oracles(problem)
    metrics = {}
    t0 = time.perf_counter()
    if alg == "agd":
        spec = AgdSpec(problem.f.L_f, problem.f.mu_f, eps)
        x, iters = agd(ora.grad_f, np.asarray(x0, float), spec)
        trace = IterateTrace("agd", ("k",))
        trace.record(ora.counters, x=x, k=iters)
        rep = SolverReport(x, None, eps, ora.counters.snapshot(), 0.0, trace, True, iters)
        g = float(np.linalg.norm(problem.f.gradient(x)))
        metrics.update(accuracy_name="grad_norm", accuracy=g, within_tolerance=None)
    elif alg == "sc":
        rep = solve_sc(problem, x0, ScConfig(eps, D=D), oracles=ora, reference=ref)
        trace = rep.trace
        _distance_metrics(metrics, rep.x, xs, eps, problem)
    elif alg == "nc":
        F0 = problem.objective(x0)
        dp = float(problem.meta.get("Delta", F0 if np.isfinite(F0) and F0 > 0 else 1.0))
        trace, best_k = solve_nc(problem, NcConfig(T or 50, dp, x0, record_iterates=True),
                                 oracles=ora)
        best = trace.meta["best_subopt_nc"]
        rep = SolverReport(trace.iterates[best_k - 1], None, eps, ora.counters.snapshot(), 0.0,
                           trace, True, len(trace), {"best_k": best_k, "min_subopt_nc": best,
                                                     "delta_prime": dp})
        metrics.update(accuracy_name="min_subopt_nc", accuracy=best, within_tolerance=None)
    elif alg == "c-perturb":
        r = rho if rho is not None else (max(1.0, 2.0 * float(np.linalg.norm(ls))) if ls is not None
                                        else 1.0)
        rep = solve_c_perturb(problem, x0, PerturbConfig(D or 1.0, eps, r), oracles=ora)
        trace = rep.trace
        if Fs is not None:
            val = subopt_c(rep.x, problem, r, Fs)
            metrics.update(accuracy_name="subopt_c", accuracy=val, within_tolerance=bool(val <= eps))
        else:
            metrics.update(accuracy_name="residual", accuracy=_residual(problem, rep.x),
                           within_tolerance=None)
    elif alg in ("c-appa", "appa"):
        Dv = D or (float(np.linalg.norm(xs - x0)) if xs is not None else 1.0)
        rep = solve_c_appa(problem, x0, AppaConfig(T or 50, max(Dv, 1e-12)), oracles=ora,
                           reference=ref)
        trace = rep.trace
        if xs is not None:
            v = trace.column("v")[-1]
            metrics.update(accuracy_name="v", accuracy=float(v), within_tolerance=None)
        else:
            metrics.update(accuracy_name="residual", accuracy=_residual(problem, rep.x),
                           within_tolerance=None)
    elif alg in _LOOP:
        trace = run_single_loop(problem, x0, np.zeros(problem.A.m),
                                SingleLoopConfig(_LOOP[alg], T=T or 100, record_iterates=True),
                                x_star=xs, oracles=ora)
        x = trace.iterates[-1] if trace.iterates else np.asarray(x0, float)
        rep = SolverReport(x, trace.duals[-1] if trace.duals else None, eps, ora.counters.snapshot(), 0.0, trace, True, len(trace))
        metrics.update(accuracy_name="dist_x" if xs is not None else "residual",
                       accuracy=float(trace.column("dist_x" if xs is not None else "residual")[-1])
                       if len(trace) else float("nan"), within_tolerance=None)
    else:
        raise UsageError(f"unknown algorithm {alg!r}")
    rep.wall_time = time.perf_counter() - t0
    return rep, trace, metrics


def _residual(problem, x):
    return float(np.linalg.norm(problem.residual(x)))


def _distance_metrics(metrics, x, xs, eps, problem):
    if xs is not None:
        d = float(np.linalg.norm(x - xs))
        metrics.update(accuracy_name="dist_x", accuracy=d, within_tolerance=bool(d <= eps))
    else:
        metrics.update(accuracy_name="residual", accuracy=_residual(problem, x), within_tolerance=None)


def write_plot(trace, column, path):
    """Two-column ``k value`` text file for gnuplot."""
    ks = trace.column("k")
    vs = trace.column(column)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# k {column}\n")
        for k, v in zip(ks, vs):
            fh.write(f"{int(k)} {float(v)!r}\n")


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args):
    params = _base_params(args)
    prob, x0 = generate(args.kind, params)
    save_problem(args.out, prob, x0)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_solve(args):
    problem, x0 = load_problem(args.instance)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        rep, trace, metrics = run_alg(problem, x0, args.alg, args.eps, args.rho, args.T)
    except (NonConvergenceError, DivergenceError) as err:
        if getattr(err, "trace", None) is not None and args.trace == "csv":
            err.trace.to_csv(out / "trace.csv")
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    doc = rep.to_dict(include_timing=not args.no_timing)
    doc.update(algorithm=args.alg, schema=SCHEMA_VERSION, **metrics)
    with open(out / "report.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_clean(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.trace == "csv":
        trace.to_csv(out / "trace.csv")
    for col in args.plot or ():
        if col not in trace.all_columns():
            raise UsageError(f"trace has no column {col!r}; available: {trace.all_columns()}")
        write_plot(trace, col, out / f"{col}.dat")
    print(f"{metrics['accuracy_name']} = {metrics['accuracy']:.6g}")
    if metrics["within_tolerance"] is False:
        print(f"error: {metrics['accuracy_name']} above the requested tolerance {args.eps:g}",
              file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_verify(args):
    results = run_checks(seed=args.seed, inject=args.inject)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


BENCH_FIXED = ("alg", "kind") + tuple(SWEEP_KEYS)
BENCH_RESULTS = COUNTER_COLUMNS + ("outer_iters", "accuracy_name", "accuracy", "within_tolerance",
                                   "status")


def parse_sweeps(items):
    """``["KEY=V1,V2", ...]`` into an ordered list of ``(key, values)``."""
    out = []
    for item in items or ():
        key, sep, vals = item.partition("=")
        if not sep or key not in SWEEP_KEYS:
            raise UsageError(f"bad --sweep {item!r}; expected KEY=V1,V2 with KEY in {list(SWEEP_KEYS)}")
        try:
            conv = SWEEP_KEYS[key]
            values = [conv(float(v)) for v in vals.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"bad value in --sweep {item!r}") from None
        out.append((key, values))
    return out


def bench_cells(base, sweeps):
    keys = [k for k, _ in sweeps]
    for combo in itertools.product(*[v for _, v in sweeps]):
        cell = dict(base)
        cell.update(zip(keys, combo))
        yield cell


def run_cell(kind, alg, cell):
    row = {k: cell.get(k) for k in BENCH_FIXED}
    row.update(alg=alg, kind=kind)
    try:
        prob, x0 = generate(kind, cell)
        rep, trace, metrics = run_alg(prob, x0, alg, cell["eps"], cell.get("rho"), cell.get("T"))
        row.update(rep.counters.as_dict(), outer_iters=rep.outer_iters, status="ok", **metrics)
        row["wall_time"] = rep.wall_time
    except (NonConvergenceError, DivergenceError) as err:
        row.update(status=type(err).__name__)
    return row


def cmd_bench(args):
    base = _base_params(args)
    cells = list(bench_cells(base, parse_sweeps(args.sweep)))
    threads = max(1, int(os.environ.get("COMPOSOLVE_THREADS", "1") or 1))
    if threads > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda c: run_cell(args.kind, args.alg, c), cells))
    else:
        rows = [run_cell(args.kind, args.alg, c) for c in cells]

    cols = list(BENCH_FIXED) + list(BENCH_RESULTS) + ([] if args.no_timing else ["wall_time"])
    buf = io.StringIO(newline="")
    buf.write(f"# composolve-bench schema={SCHEMA_VERSION}\n")
    w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(r.get(k)) for k in cols})
    text = buf.getvalue()
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return v


def _clean(v):
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return _clean(v.item())
    return v


def _base_params(args):
    return {"kappa_A": args.kappa_A, "kappa_f": args.kappa_f, "k_budget": args.k_budget,
            "L_f": args.L_f, "D": args.D, "Delta": args.Delta, "n": args.n, "m": args.m,
            "seed": args.seed, "eps": getattr(args, "eps", 1e-6), "rho": getattr(args, "rho", None),
            "T": getattr(args, "T", None)}


def _positive(kind):
    def conv(s):
        try:
            v = kind(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid number {s!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return v
    return conv


def _add_gen_params(p):
    p.add_argument("--kappa-A", dest="kappa_A", type=_positive(float), default=5.0,
                   help="target condition number of A (default 5)")
    p.add_argument("--kappa-f", dest="kappa_f", type=_positive(float), default=16.0,
                   help="condition number of f for chain_sc (default 16)")
    p.add_argument("--k-budget", dest="k_budget", type=_positive(int), default=100,
                   help="iteration budget that sizes chain instances (default 100)")
    p.add_argument("--L-f", dest="L_f", type=_positive(float), default=1.0)
    p.add_argument("--D", type=_positive(float), default=1.0, help="distance ||x0 - x*||")
    p.add_argument("--Delta", type=_positive(float), default=1.0, help="initial gap for chain_nc")
    p.add_argument("--n", type=_positive(int), default=20, help="variables for qp")
    p.add_argument("--m", type=_positive(int), default=10, help="constraints for qp")
    p.add_argument("--seed", type=int, default=0)


def _add_solver_params(p):
    p.add_argument("--alg", choices=ALGS, required=True)
    p.add_argument("--eps", type=_positive(float), default=1e-6)
    p.add_argument("--rho", type=_positive(float), default=None,
                   help="surrogate radius for c-perturb (default max(1, 2||lambda*||))")
    p.add_argument("--T", type=_positive(int), default=None, help="outer steps for nc, appa, cp, ogda, lalm")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock times for byte-identical output")


def build_parser():
    ap = argparse.ArgumentParser(prog="composolve", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write an instance JSON file")
    g.add_argument("kind", choices=GEN_KINDS)
    _add_gen_params(g)
    g.add_argument("--out", required=True, help="output JSON path")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("--instance", required=True)
    _add_solver_params(s)
    s.add_argument("--out", default=".", help="output directory")
    s.add_argument("--trace", choices=("csv", "none"), default="csv")
    s.add_argument("--plot", action="append", metavar="COLUMN",
                   help="also write COLUMN.dat with two columns (k, value); repeatable")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="run the self-check suite")
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--inject", choices=INJECTIONS, default=None,
                   help="deliberately break one ingredient")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="sweep generator and solver parameters")
    b.add_argument("kind", choices=GEN_KINDS)
    _add_gen_params(b)
    _add_solver_params(b)
    b.add_argument("--sweep", action="append", metavar="KEY=V1,V2",
                   help=f"values for one key (repeatable, cartesian product); keys: {', '.join(SWEEP_KEYS)}")
    b.add_argument("--out", default="-", help="CSV path ('-' for stdout)")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as err:
        return EXIT_USAGE if err.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergenceError, DivergenceError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
