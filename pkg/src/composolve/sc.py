"""Inexact dual proximal-point method for strongly convex ``f``.

Each outer step regularizes the dual with weight ``ell`` and solves the
resulting smooth, strongly convex primal problem ``Psi_k`` by `agd`; the dual
iterate is then refreshed in closed form through the prox of ``h``.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .agd import AgdSpec, agd
from .errors import NonConvergenceError, NotStronglyConvexError, ParameterError
from .oracles import Oracles
from .prox import prox_conjugate_scaled
from .trace import IterateTrace, SolverReport

SC_COLUMNS = ("k", "delta", "inner_iters", "residual", "dist_x", "dist_lam")


@dataclass
class ScConfig:
    """Settings for `solve_sc`.

    ``ell`` defaults to the dual strong-concavity modulus ``sigma^2 / L_f``,
    ``D`` (a bound on ``||x0 - x*||``, only used inside logarithms) to
    ``max(1, 10 ||x0||)`` and ``lambda0`` to zeros. ``kkt_tol`` enables an
    optional early exit on a computable KKT residual.
    """

    epsilon: float
    ell: Optional[float] = None
    D: Optional[float] = None
    lambda0: Optional[np.ndarray] = None
    outer_cap: Optional[int] = None
    kkt_tol: Optional[float] = None
    record_iterates: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ParameterError("epsilon must be positive")
        if self.ell is not None and not self.ell > 0:
            raise ParameterError("ell must be positive")
        if self.D is not None and not self.D > 0:
            raise ParameterError("D must be positive")
        if self.outer_cap is not None and self.outer_cap < 1:
            raise ParameterError("outer_cap must be positive")


@dataclass
class ScState:
    x: np.ndarray
    lam: np.ndarray
    k: int = 0
    inner_iters_per_step: list = field(default_factory=list)


def dual_modulus(problem, lambda0=None):
    """Return ``(sigma, rank_deficient)`` for the dual strong-concavity modulus.

    Full-row-rank maps use ``sigma_min``. Equality constraints with a
    rank-deficient map fall back to the smallest nonzero singular value,
    which is only valid when the dual iterates stay in the range of ``A``
    (guaranteed from ``lambda0 = 0``).
    """
    A = problem.A
    if A.sigma_min > 0:
        return A.sigma_min, False
    if problem.h.kind == "indicator_zero" and A.sigma_min_nz > 0:
        if lambda0 is not None and np.any(np.asarray(lambda0) != 0):
            raise ParameterError("rank-deficient constraints require lambda0 = 0")
        return A.sigma_min_nz, True
    raise ParameterError("the linear map needs a positive (nonzero) minimum singular value")


def outer_count(ell, mu_phi, kappa_f, kappa_A, D, epsilon):
    """``ceil((12 ell / mu_phi) log(100 kappa_f kappa_A D / epsilon))``, at least 1."""
    arg = 100.0 * kappa_f * kappa_A * D / epsilon
    return max(1, int(math.ceil(12.0 * ell / mu_phi * math.log(arg)))) if arg > 1 else 1


def dual_reg_multiplier(problem, lambda_prev, ell, x, oracles=None):
    """``prox_{h*/ell}(lambda_prev + (Ax - b)/ell)``, the maximizing multiplier of ``Psi_k``."""
    if not ell > 0:
        raise ParameterError("ell must be positive")
    ora = Oracles(problem) if oracles is None else oracles
    w = lambda_prev + (ora.A(x) - problem.b) / ell
    return prox_conjugate_scaled(problem.h, ell, w, prox=ora.prox)


def psi_k_gradient(problem, lambda_prev, ell, x, oracles=None):
    """``grad f(x) + A' lambda*_k(x)``; one call to each of the four oracles."""
    ora = Oracles(problem) if oracles is None else oracles
    lam = dual_reg_multiplier(problem, lambda_prev, ell, x, ora)
    return ora.grad_f(x) + ora.At(lam)


def solve_sc(problem, x0, config, oracles=None, reference=None, callback=None):
    """Solve ``min f(x) + h(Ax - b)`` for ``mu_f``-strongly convex ``f``.

    Parameters
    ----------
    problem : CompositeProblem
    x0 : ndarray
        Primal starting point.
    config : ScConfig
    oracles : Oracles, optional
        Counting oracle front-end to charge calls to (a fresh one by default).
    reference : tuple of ndarray, optional
        ``(x_star, lambda_star)``; either may be None. When given, the trace
        records ``dist_x`` and ``dist_lam`` per outer step.
    callback : callable, optional
        ``callback(x)`` after every inner gradient step.

    Returns
    -------
    SolverReport
        ``extra`` holds ``T``, ``ell``, ``rho``, ``mu_phi``, ``sigma``, ``D``
        and the inner iteration counts.

    Raises
    ------
    NotStronglyConvexError
        If ``problem.f.mu_f == 0``.
    NonConvergenceError
        If ``outer_cap`` is smaller than the outer count, or an inner solve
        fails; the partial trace is attached.
    """
    t0 = time.perf_counter()
    f, A = problem.f, problem.A
    if f.mu_f <= 0:
        raise NotStronglyConvexError("the strongly convex solver needs mu_f > 0")
    ora = Oracles(problem) if oracles is None else oracles
    sigma, deficient = dual_modulus(problem, config.lambda0)
    mu_phi = sigma ** 2 / f.L_f
    ell = mu_phi if config.ell is None else float(config.ell)
    if ell < mu_phi * (1 - 1e-12):
        raise ParameterError(f"ell={ell} must be at least mu_phi={mu_phi}")
    rho = mu_phi / (12.0 * ell)
    x = np.array(x0, dtype=np.float64)
    D = max(1.0, 10.0 * float(np.linalg.norm(x))) if config.D is None else float(config.D)
    kappa_f = f.L_f / f.mu_f
    kappa_A = A.L_A / sigma
    T = outer_count(ell, mu_phi, kappa_f, kappa_A, D, config.epsilon)
    steps = T if config.outer_cap is None else min(T, config.outer_cap)

    lam = np.zeros(A.m) if config.lambda0 is None else np.array(config.lambda0, dtype=np.float64)
    state = ScState(x, lam)
    x_star, lam_star = (None, None) if reference is None else reference
    trace = IterateTrace("sc", SC_COLUMNS, keep_iterates=config.record_iterates)
    trace.meta.update(T=T, ell=ell, rho=rho, mu_phi=mu_phi, D=D)
    L_psi = f.L_f + A.L_A ** 2 / ell
    lam_older = None
    delta_prev = None

    for k in range(1, steps + 1):
        delta = (1.0 - rho) ** (k / 2.0) * D
        lam_prev = state.lam

        def grad(y, lam_prev=lam_prev):
            return psi_k_gradient(problem, lam_prev, ell, y, ora)

        r_guess = None
        if lam_older is not None:
            r_guess = A.L_A / f.mu_f * float(np.linalg.norm(lam_prev - lam_older)) + delta_prev
        try:
            x_new, iters = agd(grad, state.x, AgdSpec(L_psi, f.mu_f, delta), r_guess=r_guess,
                               callback=callback)
        except NonConvergenceError as err:
            err.outer_index, err.trace = k, trace
            raise
        Ax = ora.A(x_new)
        w = lam_prev + (Ax - problem.b) / ell
        lam_new = prox_conjugate_scaled(problem.h, ell, w, prox=ora.prox)
        lam_older, delta_prev = lam_prev, delta
        state.x, state.lam, state.k = x_new, lam_new, k
        state.inner_iters_per_step.append(iters)

        trace.record(ora.counters, x=x_new, lam=lam_new, k=k, delta=delta, inner_iters=iters,
                     residual=float(np.linalg.norm(Ax - problem.b)),
                     dist_x=None if x_star is None else float(np.linalg.norm(x_new - x_star)),
                     dist_lam=None if lam_star is None else float(np.linalg.norm(lam_new - lam_star)))
        if config.kkt_tol is not None:
            kkt = float(np.linalg.norm(ora.grad_f(x_new) + ora.At(lam_new)))
            kkt += ell * float(np.linalg.norm(lam_new - lam_prev))
            if kkt <= config.kkt_tol:
                break
    else:
        if steps < T:
            raise NonConvergenceError(
                f"outer cap {config.outer_cap} reached before the prescribed {T} steps",
                x=state.x, trace=trace, outer_index=steps)

    extra = {"T": T, "ell": ell, "rho": rho, "mu_phi": mu_phi, "sigma": sigma, "D": D,
             "rank_deficient": deficient, "inner_iters": list(state.inner_iters_per_step)}
    return SolverReport(state.x, state.lam, config.epsilon, ora.counters.snapshot(),
                        time.perf_counter() - t0, trace, True, state.k, extra)
