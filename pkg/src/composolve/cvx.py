"""Solvers for convex ``f``: a strongly convex perturbation and an accelerated proximal-point method."""

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NonConvergenceError, ParameterError, UnsupportedError
from .oracles import Oracles
from .problem import CompositeProblem, SmoothObjective
from .sc import ScConfig, solve_sc
from .trace import IterateTrace, SolverReport


# ---------------------------------------------------------------------------
# perturbation route


@dataclass
class PerturbConfig:
    D: float
    epsilon: float
    rho: float

    def __post_init__(self):
        if not (self.D > 0 and self.epsilon > 0 and self.rho > 0):
            raise ParameterError("D, epsilon and rho must be positive")


def perturbed_objective(f, x0, weight):
    """``f(x) + (weight/2) ||x - x0||^2`` with moduli shifted by ``weight``."""
    c = np.array(x0, dtype=np.float64)

    def value(x):
        r = x - c
        return f.value(x) + 0.5 * weight * float(r @ r)

    def gradient(x):
        return f.gradient(x) + weight * (x - c)

    return SmoothObjective(value, gradient, f.L_f + weight, weight, f.dim, name="perturbed")


def solve_c_perturb(problem, x0, config, oracles=None, callback=None):
    """Convex ``f``: solve the ``epsilon/D^2``-strongly convex perturbation to a matched distance.

    The perturbed problem adds ``epsilon / (2 D^2) ||x - x0||^2`` to ``f`` and
    is solved by `solve_sc` to distance
    ``min(epsilon / (3 C), sqrt(epsilon / (3 L_f)))`` with
    ``C = ||grad f(x0)|| + L_f D + rho L_A``, which keeps the surrogate gap
    ``f + h_rho(A . - b) - F*`` below ``epsilon``.
    """
    t0 = time.perf_counter()
    ora = Oracles(problem) if oracles is None else oracles
    x0 = np.array(x0, dtype=np.float64)
    f, D, eps = problem.f, config.D, config.epsilon
    C = float(np.linalg.norm(ora.grad_f(x0))) + f.L_f * D + config.rho * problem.A.L_A
    delta = min(eps / (3.0 * C), math.sqrt(eps / (3.0 * f.L_f)))
    sub = CompositeProblem(perturbed_objective(f, x0, eps / D ** 2), problem.h, problem.A, problem.b)
    rep = solve_sc(sub, x0, ScConfig(delta, D=D), oracles=Oracles(sub, ora.counters), callback=callback)
    rep.epsilon = eps
    rep.counters = ora.counters.snapshot()
    rep.wall_time = time.perf_counter() - t0
    rep.extra.update(delta=delta, C_rho=C, rho_surrogate=config.rho)
    return rep


# ---------------------------------------------------------------------------
# accelerated proximal point (equality constraints)


def t_sequence(T):
    """``t_1 = 1``, ``t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2``; returns ``t_1..t_T``."""
    t = np.empty(int(T))
    if T >= 1:
        t[0] = 1.0
    for k in range(1, int(T)):
        t[k] = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t[k - 1] ** 2))
    return t


def _omega1_rhs(w, L, L_A, sigma, D):
    tau = 0.5 * L * D * D
    B = (L * L_A * w + L * (L_A * D + 1.0) + L_A) / sigma ** 2
    s = math.sqrt(2.0 / L)
    return s * (math.sqrt(tau) + math.sqrt(2.0 / L + B + s * (math.sqrt(tau) + math.sqrt(B))))


def omega1_root(L_f, L_A, sigma, D, rtol=1e-10):
    """Largest ``w`` with ``w = rhs(w)``; ``rhs`` is concave and positive at 0.

    Bisection on ``[0, B]`` with ``B`` doubled until ``rhs(B) < B``.
    """
    g = lambda w: _omega1_rhs(w, L_f, L_A, sigma, D) - w
    lo, hi = 0.0, 1.0
    for _ in range(2000):
        if g(hi) < 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ArithmeticError(f"could not bracket the root: g({hi:.3g}) = {g(hi):.3g}")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def compute_varpi(L_f, L_A, sigma_min_nz, D):
    """Growth constant of the distance bound used to size the feasibility schedule."""
    if not (L_f > 0 and L_A > 0 and sigma_min_nz > 0 and D > 0):
        raise ParameterError("all parameters must be positive")
    s2 = sigma_min_nz ** 2
    c0 = 1.5 * D
    c1 = 4.0 * L_A / s2
    c2 = (6.0 * L_f * D * D + 8.0 * (4.0 * L_f + L_A) / s2) / (2.0 * L_f)
    d0 = c0 + c1 + math.sqrt(c2) + math.sqrt(c0 * c1)
    d1 = 4.0 * L_A / s2
    lin = (math.sqrt(d1) + math.sqrt(d1 + 4.0 * d0)) ** 2 / 4.0
    return max(lin, omega1_root(L_f, L_A, sigma_min_nz, D))


def default_eps_schedule(L_f, D):
    cap = math.sqrt(2.0 / L_f)
    return lambda k: min(math.sqrt(L_f) * D / (2.0 * math.sqrt(2.0) * k * k), cap)


def default_gamma_schedule(L_f, L_A, sigma, D, varpi, t):
    """``min(c, 1) / (t_k^2 (k+1)^3)`` with the largest admissible ``c``; ``t`` is 1-based via ``t[k-1]``."""
    c = sigma ** 2 * L_f * D * D / (8.0 * (L_f * L_A * (varpi + D) + 4.0 * L_f + L_A))
    c = min(c, 1.0)
    return lambda k: c / (t[k - 1] ** 2 * (k + 1) ** 3)


@dataclass
class AppaConfig:
    """``T`` outer steps, distance bound ``D``; schedules default to their caps."""

    T: int
    D: float
    eps_schedule: Optional[Callable] = None
    gamma_schedule: Optional[Callable] = None
    varpi: Optional[float] = None
    max_retries: int = 40
    record_iterates: bool = False

    def __post_init__(self):
        if int(self.T) < 1:
            raise ParameterError("T must be at least 1")
        if not self.D > 0:
            raise ParameterError("D must be positive")


APPA_COLUMNS = ("k", "t", "eps_k", "gamma_k", "delta_norm", "zeta_norm", "v", "inner_tol", "retries")


def solve_c_appa(problem, x0, config, oracles=None, reference=None, callback=None):
    """Accelerated inexact proximal point for ``min f(x) s.t. Ax = b`` with convex ``f``.

    Every step approximately solves ``min f(x) + (L/2)||x - y_k||^2, Ax = b``
    with `solve_sc` until the stationarity residual is at most
    ``sqrt(L/2) eps_k / t_k`` and the feasibility residual at most
    ``gamma_k``; the inner distance target starts at
    ``min(sqrt(L/2) eps_k / t_k, gamma_k) / (L_A + 2L)`` and is halved
    whenever the residuals are not yet met.

    Parameters
    ----------
    reference : tuple, optional
        ``(x_star, lambda_star)``. Enables the ``v`` column,
        ``f(x_k) - f(x*) + <lambda*, A x_k - b>``.
    """
    t0 = time.perf_counter()
    if problem.h.kind != "indicator_zero":
        raise UnsupportedError("the accelerated proximal-point route needs equality constraints",
                               kind=problem.h.kind)
    ora = Oracles(problem) if oracles is None else oracles
    f, A, b = problem.f, problem.A, problem.b
    L = f.L_f
    sigma = A.sigma_min if A.sigma_min > 0 else A.sigma_min_nz
    if not sigma > 0:
        raise ParameterError("the linear map needs a positive minimum nonzero singular value")
    T, D = int(config.T), float(config.D)
    t = t_sequence(T + 1)
    varpi = compute_varpi(L, A.L_A, sigma, D) if config.varpi is None else config.varpi
    eps_k = config.eps_schedule or default_eps_schedule(L, D)
    gamma_k = config.gamma_schedule or default_gamma_schedule(L, A.L_A, sigma, D, varpi, t)
    x_star, lam_star = (None, None) if reference is None else reference
    f_star = None if x_star is None else f.value(x_star)
    warm_dual = A.sigma_min > 0

    x_prev = np.array(x0, dtype=np.float64)
    y = x_prev.copy()
    x, lam = x_prev, None
    trace = IterateTrace("appa", APPA_COLUMNS, keep_iterates=config.record_iterates)
    trace.meta.update(varpi=varpi, T=T, D=D)
    for k in range(1, T + 1):
        tk = t[k - 1]
        stat_tol = math.sqrt(L / 2.0) * eps_k(k) / tk
        feas_tol = gamma_k(k)
        tol = min(stat_tol, feas_tol) / (A.L_A + 2.0 * L)
        sub = CompositeProblem(_prox_objective(f, y), problem.h, A, b)
        sub_ora = Oracles(sub, ora.counters)
        start, lam0 = x_prev, (lam if warm_dual else None)
        for retry in range(config.max_retries + 1):
            try:
                rep = solve_sc(sub, start, ScConfig(tol, D=max(1.0, D), lambda0=lam0),
                               oracles=sub_ora, callback=callback)
            except NonConvergenceError as err:
                err.outer_index = k
                err.trace = trace
                raise
            xk, lk = rep.x, rep.lam
            dnorm = float(np.linalg.norm(ora.grad_f(xk) + L * (xk - y) + ora.At(lk)))
            znorm = float(np.linalg.norm(ora.A(xk) - b))
            if dnorm <= stat_tol and znorm <= feas_tol:
                break
            tol *= 0.5
            if warm_dual:
                start, lam0 = xk, lk
        else:
            raise NonConvergenceError(
                f"step {k}: residuals ({dnorm:.3g}, {znorm:.3g}) above ({stat_tol:.3g}, {feas_tol:.3g})"
                f" after {config.max_retries} halvings", x=xk, residual=max(dnorm, znorm),
                trace=trace, outer_index=k)
        x, lam = xk, lk
        v = None
        if x_star is not None and lam_star is not None:
            v = f.value(x) - f_star + float(lam_star @ (A.apply(x) - b))
        trace.record(ora.counters, x=x, lam=lam, k=k, t=tk, eps_k=eps_k(k), gamma_k=feas_tol,
                     delta_norm=dnorm, zeta_norm=znorm, v=v, inner_tol=tol, retries=retry)
        y = x + (tk - 1.0) / t[k] * (x - x_prev)
        x_prev = x

    extra = {"varpi": varpi, "T": T}
    return SolverReport(x, lam, gamma_k(T), ora.counters.snapshot(), time.perf_counter() - t0,
                        trace, True, T, extra)


def _prox_objective(f, center):
    L = f.L_f
    c = np.array(center, dtype=np.float64)

    def value(x):
        r = x - c
        return f.value(x) + 0.5 * L * float(r @ r)

    def gradient(x):
        return f.gradient(x) + L * (x - c)

    return SmoothObjective(value, gradient, 2.0 * L, L, f.dim, name="appa_subproblem")
