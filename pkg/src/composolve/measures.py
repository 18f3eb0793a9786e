"""Suboptimality measures and zero-chain support tracking."""

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import UnsupportedError, NonConvergenceError
from .instances import ChainMatrix
from .problem import CompositeProblem, squared_distance
from .prox import SurrogateSpec, h_rho_value
from .sc import ScConfig, solve_sc

#: inner accuracy of the prox evaluation used by `subopt_nc` for general h
NC_INNER_TOL = 1e-10


def subopt_sc(x, x_star):
    """Return ``(||x - x*||^2, ||x - x*||)``."""
    dist = float(np.linalg.norm(np.asarray(x) - np.asarray(x_star)))
    return dist * dist, dist


def project_affine(A, z, b):
    """Euclidean projection onto ``{x : Ax = b}``.

    Chain matrices use a banded tridiagonal solve; other maps are densified
    and solved through a Cholesky factor of ``AA'``. A rank-deficient
    ``AA'`` is regularized by ``1e-14`` (least-squares projection).
    """
    if isinstance(A, ChainMatrix):
        return A.project_affine(z, b)
    M = A.to_dense()
    r = M @ z - b
    G = M @ M.T
    try:
        y = cho_solve(cho_factor(G), r)
    except np.linalg.LinAlgError:
        G = G + 1e-14 * np.eye(G.shape[0])
        y = np.linalg.lstsq(G, r, rcond=None)[0]
    return z - M.T @ y


def composite_prox(problem, z, t):
    """``argmin_u h(Au - b) + ||u - z||^2 / (2t)``; returns ``(u, error_bound)``."""
    h, A = problem.h, problem.A
    if h.kind == "indicator_zero":
        return project_affine(A, z, problem.b), 0.0

    sub = CompositeProblem(squared_distance(z, 1.0 / t), h, A, problem.b)
    try:
        rep = solve_sc(sub, z, ScConfig(NC_INNER_TOL, D=max(1.0, 2.0 * float(np.linalg.norm(z)))))
    except (ValueError, NonConvergenceError) as err:
        raise UnsupportedError(f"cannot evaluate the composite prox: {err}", kind=h.kind) from err
    return rep.x, NC_INNER_TOL


def subopt_nc(x, problem, return_error=False):
    """First-order stationarity violation ``L ||x - prox(x - grad f(x) / (2L))||``.

    The prox is that of ``h(A . - b) / (2L)`` with ``L = problem.f.L_f``, the
    same step as the gradient part, so the value vanishes exactly at
    stationary points. Scaling ``h`` does not change cone indicators. The prox
    is exact for equality constraints and computed by an inner strongly
    convex solve otherwise, in which case ``return_error=True`` also returns a
    bound on the measurement error.
    """
    L = problem.f.L_f
    x = np.asarray(x, dtype=np.float64)
    z = x - problem.f.gradient(x) / (2.0 * L)
    p, err = composite_prox(problem, z, 0.5 / L)
    val = L * float(np.linalg.norm(x - p))
    if return_error:
        return val, L * err
    return val


def subopt_c(x, problem, rho, F_star):
    """``f(x) + h_rho(Ax - b) - F*``."""
    x = np.asarray(x, dtype=np.float64)
    r = problem.A.apply(x) - problem.b
    return problem.f.value(x) + h_rho_value(problem.h, SurrogateSpec(rho), r) - F_star


def chain_depth(k, N):
    """Number of leading coordinates a chain iterate may have filled after k rounds."""
    return (int(k) - 2) // (N + 1) + 1


def q2k_floor(q, K, dist0_sq):
    """``q^(2K) / 4 * ||x0 - x*||^2``."""
    return q ** (2 * K) / 4.0 * dist0_sq


class SupportPattern:
    """Entries ``(block, coordinate)`` a linear-span method may have touched after k rounds.

    With ``k = (i-1)(N+1) + j`` and ``1 <= j <= N+1`` the allowed set is every
    block on coordinates ``< i``, blocks ``1..N+j-1`` on coordinate ``i`` and
    blocks ``1..j-2`` on coordinate ``i+1`` (1-based). Beyond ``i = d-1``
    nothing is excluded.
    """

    def __init__(self, N, d, k):
        self.N, self.d, self.k = int(N), int(d), int(k)
        if self.k <= 0:
            self.i, self.j = 0, 0
        else:
            self.i = (self.k - 1) // (self.N + 1) + 1
            self.j = (self.k - 1) % (self.N + 1) + 1

    def mask(self):
        N, d, i, j = self.N, self.d, self.i, self.j
        m = np.zeros((2 * N, d), dtype=bool)
        if self.k <= 0:
            return m
        if i > d - 1:
            m[:] = True
            return m
        m[:, :i - 1] = True
        m[:N + j - 1, i - 1] = True
        if j >= 3:
            m[:j - 2, i] = True
        return m


def check_support(x, k, N, d):
    """True iff every entry of ``x`` outside the round-k pattern is exactly zero."""
    X = np.asarray(x).reshape(2 * N, d)
    return bool(np.all(X[~SupportPattern(N, d, k).mask()] == 0.0))
