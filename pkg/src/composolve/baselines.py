"""Single-loop primal-dual methods for ``min f(x) s.t. Ax = b``."""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import DivergenceError, ParameterError, UnsupportedError
from .instances import ChainMatrix
from .measures import check_support
from .oracles import Oracles
from .trace import IterateTrace

METHODS = ("chambolle_pock", "ogda", "linearized_alm")
DIVERGENCE_THRESHOLD = 1e12
LOOP_COLUMNS = ("k", "residual", "dist_x", "support_ok")


@dataclass
class SingleLoopConfig:
    """Method tag and step sizes; unset steps take stable defaults from the problem constants."""

    method: str
    eta1: Optional[float] = None
    eta2: Optional[float] = None
    rho_penalty: Optional[float] = None
    T: int = 100
    record_iterates: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"method must be one of {METHODS}, got {self.method!r}")
        for name in ("eta1", "eta2"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ParameterError(f"{name} must be positive")
        if self.rho_penalty is not None and self.rho_penalty < 0:
            raise ParameterError("rho_penalty must be nonnegative")
        if int(self.T) < 0:
            raise ParameterError("T must be nonnegative")

    def resolved(self, L_f, L_A):
        """Fill unset steps.

        Chambolle-Pock: ``eta1 = 1/(2 L_f)``, ``eta2 = L_f / L_A^2`` (so
        ``eta1 eta2 L_A^2 = 1/2``). OGDA: ``eta1 = eta2 = 1/(4(L_f + L_A))``.
        Linearized ALM: ``rho = L_f / L_A^2``, ``eta1 = 1/(2(L_f + rho L_A^2))``,
        ``eta2 = rho``.
        """
        if self.method == "chambolle_pock":
            e1 = 1.0 / (2.0 * L_f) if self.eta1 is None else self.eta1
            e2 = L_f / L_A ** 2 if self.eta2 is None else self.eta2
            return replace(self, eta1=e1, eta2=e2, rho_penalty=0.0)
        if self.method == "ogda":
            e = 1.0 / (4.0 * (L_f + L_A))
            return replace(self, eta1=e if self.eta1 is None else self.eta1,
                           eta2=e if self.eta2 is None else self.eta2, rho_penalty=0.0)
        rho = L_f / L_A ** 2 if self.rho_penalty is None else self.rho_penalty
        e1 = 1.0 / (2.0 * (L_f + rho * L_A ** 2)) if self.eta1 is None else self.eta1
        return replace(self, eta1=e1, eta2=rho if self.eta2 is None else self.eta2, rho_penalty=rho)


def run_single_loop(problem, x0, lambda0, config, x_star=None, oracles=None, callback=None):
    """Run ``config.T`` iterations of a single-loop method.

    Chambolle-Pock::

        x+ = x - eta1 (grad f(x) + A'lam)
        lam+ = lam + eta2 (2 A x+ - A x - b)

    OGDA::

        x+ = x - eta1 (2 grad f(x) - grad f(x-) + A'(2 lam - lam-))
        lam+ = lam + eta2 (2 A x - A x- - b)

    Linearized ALM::

        x+ = x - eta1 (grad f(x) + A'lam + rho A'(A x - b))
        lam+ = lam + eta2 (A x+ - b)

    OGDA starts from ``x- = x0``, ``lam- = lam0``. Each iteration makes one
    call to ``grad f``, ``A`` and ``A'``. On chain problems the trace checks
    the zero-chain support pattern of every iterate.

    Returns
    -------
    IterateTrace

    Raises
    ------
    DivergenceError
        When ``||x_k|| > 1e12``.
    """
    if problem.h.kind != "indicator_zero":
        raise UnsupportedError("single-loop baselines handle equality constraints only",
                               kind=problem.h.kind)
    cfg = config.resolved(problem.f.L_f, problem.A.L_A)
    ora = Oracles(problem) if oracles is None else oracles
    b = problem.b
    e1, e2, rho = cfg.eta1, cfg.eta2, cfg.rho_penalty
    chain = problem.A if isinstance(problem.A, ChainMatrix) else None

    x = np.array(x0, dtype=np.float64)
    lam = np.array(lambda0, dtype=np.float64)
    trace = IterateTrace(cfg.method, LOOP_COLUMNS, keep_iterates=cfg.record_iterates)
    trace.meta.update(eta1=e1, eta2=e2, rho_penalty=rho)
    Ax = ora.A(x)
    g = ora.grad_f(x)
    Ax_old, g_old, lam_old = Ax, g, lam
    for k in range(1, int(cfg.T) + 1):
        if cfg.method == "chambolle_pock":
            x_new = x - e1 * (g + ora.At(lam))
            Ax_new = ora.A(x_new)
            lam_new = lam + e2 * (2.0 * Ax_new - Ax - b)
        elif cfg.method == "ogda":
            x_new = x - e1 * (2.0 * g - g_old + ora.At(2.0 * lam - lam_old))
            lam_new = lam + e2 * (2.0 * Ax - Ax_old - b)
            Ax_new = ora.A(x_new)
        else:
            x_new = x - e1 * (g + ora.At(lam + rho * (Ax - b)))
            Ax_new = ora.A(x_new)
            lam_new = lam + e2 * (Ax_new - b)
        Ax_old, g_old, lam_old = Ax, g, lam
        x, lam, Ax = x_new, lam_new, Ax_new
        nx = float(np.linalg.norm(x))
        if not nx <= DIVERGENCE_THRESHOLD:
            raise DivergenceError(f"{cfg.method} diverged at iteration {k} (||x|| = {nx:.3g}); "
                                  "try smaller step sizes", k=k, trace=trace)
        g = ora.grad_f(x)
        if callback is not None:
            callback(x)
        trace.record(ora.counters, x=x, lam=lam, k=k,
                     residual=float(np.linalg.norm(Ax - b)),
                     dist_x=None if x_star is None else float(np.linalg.norm(x - x_star)),
                     support_ok=None if chain is None else check_support(x, k, chain.N, chain.d))
    return trace
