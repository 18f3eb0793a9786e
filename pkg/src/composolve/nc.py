"""Inexact proximal-point method for non-convex smooth ``f``."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonConvergenceError, ParameterError
from .measures import subopt_nc
from .oracles import Oracles
from .problem import CompositeProblem, SmoothObjective
from .sc import ScConfig, solve_sc
from .trace import IterateTrace

NC_COLUMNS = ("k", "delta", "subopt_nc", "F", "f", "residual", "sub_outer")


@dataclass
class NcConfig:
    """``T`` outer steps; ``delta_prime`` bounds the initial objective gap."""

    T: int
    delta_prime: float
    x0: np.ndarray
    record_iterates: bool = False
    tolerance_scale: float = 1.0

    def __post_init__(self):
        if int(self.T) < 1:
            raise ParameterError("T must be at least 1")
        if not self.delta_prime > 0:
            raise ParameterError("delta_prime must be positive")
        if not self.tolerance_scale > 0:
            raise ParameterError("tolerance_scale must be positive")
        self.x0 = np.array(self.x0, dtype=np.float64)


def nc_tolerance(k, delta_prime, L_f):
    """Subproblem accuracy ``sqrt(delta_prime / L_f) / (2k)``."""
    return math.sqrt(delta_prime / L_f) / (2.0 * k)


def rate_bound(L_f, delta_prime, T):
    """Guaranteed ``min_k SubOpt_NC(x_k) <= sqrt(5 L_f delta_prime / T)``."""
    return math.sqrt(5.0 * L_f * delta_prime / T)


def proximal_subproblem(problem, center):
    """``f(x) + L ||x - center||^2``, declared ``L``-strongly convex and ``3L``-smooth."""
    f = problem.f
    L = f.L_f
    c = np.array(center, dtype=np.float64)

    def value(x):
        r = x - c
        return f.value(x) + L * float(r @ r)

    def gradient(x):
        return f.gradient(x) + 2.0 * L * (x - c)

    sub_f = SmoothObjective(value, gradient, 3.0 * L, L, f.dim, name="prox_subproblem")
    return CompositeProblem(sub_f, problem.h, problem.A, problem.b)


def solve_nc(problem, config, oracles=None, callback=None):
    """Run ``T`` inexact proximal-point steps ``x_k ~ argmin F(x) + L ||x - x_{k-1}||^2``.

    Each subproblem is handed to `solve_sc` with accuracy
    ``sqrt(delta_prime / L) / (2k)``, warm-started at the previous primal and
    dual iterates.

    Returns
    -------
    trace : IterateTrace
        One row per step with the stationarity measure ``subopt_nc``.
    best_k : int
        Step attaining the smallest ``subopt_nc``.

    Raises
    ------
    NonConvergenceError
        From a subproblem, with ``outer_index`` set to the failing step.
    """
    ora = Oracles(problem) if oracles is None else oracles
    L = problem.f.L_f
    x = config.x0.copy()
    lam = None
    trace = IterateTrace("nc", NC_COLUMNS, keep_iterates=config.record_iterates)
    trace.meta.update(T=int(config.T), delta_prime=config.delta_prime)
    best_k, best = 0, np.inf
    for k in range(1, int(config.T) + 1):
        delta = config.tolerance_scale * nc_tolerance(k, config.delta_prime, L)
        sub = proximal_subproblem(problem, x)
        cfg = ScConfig(delta, D=max(1.0, 2.0 * float(np.linalg.norm(x))), lambda0=lam)
        try:
            rep = solve_sc(sub, x, cfg, oracles=Oracles(sub, ora.counters), callback=callback)
        except NonConvergenceError as err:
            err.outer_index = k
            if err.trace is None:
                err.trace = trace
            raise
        x = rep.x
        # duals are only carried over when no range condition constrains them
        lam = rep.lam if problem.A.sigma_min > 0 else None
        val = subopt_nc(x, problem)
        F = problem.objective(x)
        trace.record(ora.counters, x=x, lam=lam, k=k, delta=delta, subopt_nc=val,
                     F=F if np.isfinite(F) else None, f=problem.f.value(x),
                     residual=float(np.linalg.norm(problem.residual(x))), sub_outer=rep.outer_iters)
        if val < best:
            best_k, best = k, val
    trace.meta.update(best_k=best_k, best_subopt_nc=best)
    return trace, best_k
