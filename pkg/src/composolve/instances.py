"""Chain-structured worst-case instances for linearly constrained problems.

All instances share the constraint ``x[1] = x[2] = ... = x[2N]`` written as
``Ax = 0`` with the block difference matrix `ChainMatrix`, and an objective
``f0(x) = sum_{i<=N} G(x[i], x[N+i])`` whose component ``G`` lets nonzero
coordinates travel at most one position per gradient call.
"""

import math

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import ndtr

from .errors import ParameterError
from .problem import CompositeProblem, LinearMap, SmoothObjective, dense_map, indicator_zero, quadratic

#: smoothness constant of the unscaled non-convex component
L0 = 600000.0

_SQRT_E = math.sqrt(math.e)
_PHI_SCALE = math.sqrt(2.0 * math.pi * math.e)


# ---------------------------------------------------------------------------
# constraint matrix


class ChainMatrix(LinearMap):
    """Block difference operator ``(Ax)[i] = x[i] - x[i+1]``, ``i = 1..2N-1``."""

    @property
    def N(self):
        return self.params["N"]

    @property
    def d(self):
        return self.params["d"]

    def gram_eigenvalues(self):
        """Eigenvalues ``2 + 2cos(pi i / 2N)`` of ``AA'`` (each with multiplicity d)."""
        N = self.N
        i = np.arange(1, 2 * N)
        return 2.0 + 2.0 * np.cos(np.pi * i / (2 * N))

    def solve_gram(self, r):
        """Solve ``(AA') y = r`` blockwise with a banded tridiagonal solver."""
        N, d = self.N, self.d
        nb = 2 * N - 1
        R = np.asarray(r, dtype=np.float64).reshape(nb, d)
        ab = np.empty((3, nb))
        ab[0] = -1.0
        ab[1] = 2.0
        ab[2] = -1.0
        return solve_banded((1, 1), ab, R).reshape(-1)

    def project_affine(self, z, b=None):
        """Euclidean projection of ``z`` onto ``{x : Ax = b}``."""
        r = self.apply(z) if b is None else self.apply(z) - b
        return z - self.adjoint(self.solve_gram(r))


def build_chain_matrix(N, d):
    """Matrix-free `ChainMatrix` with ``L_A = 2`` and exact smallest singular value."""
    N, d = int(N), int(d)
    if N < 1 or d < 1:
        raise ParameterError(f"need N, d >= 1, got N={N}, d={d}")
    nb = 2 * N

    def apply(x):
        X = x.reshape(nb, d)
        return (X[:-1] - X[1:]).reshape(-1)

    def adjoint(y):
        Y = y.reshape(nb - 1, d)
        out = np.zeros((nb, d))
        out[:-1] += Y
        out[1:] -= Y
        return out.reshape(-1)

    sigma = math.sqrt(2.0 + 2.0 * math.cos(math.pi * (2 * N - 1) / (2 * N)))
    return ChainMatrix(apply, adjoint, (nb - 1) * d, nb * d, 2.0, sigma, sigma,
                       kind="chain", params={"N": N, "d": d})


def append_duplicate_block(A, block=0):
    """Stack a copy of one row block of a chain matrix below it.

    The result has the same null space and is rank deficient. Its nonzero
    singular values are bounded below by the original smallest one, and
    ``||A'|| <= sqrt(L_A^2 + 2)``.
    """
    N, d = A.N, A.d
    nb = 2 * N
    if not 0 <= block < nb - 1:
        raise ParameterError(f"block must be in [0, {nb - 2}]")
    lo = block * d

    def apply(x):
        X = x.reshape(nb, d)
        return np.concatenate([A.apply(x), X[block] - X[block + 1]])

    def adjoint(y):
        out = A.adjoint(y[:A.m])
        e = y[A.m:]
        out[lo:lo + d] += e
        out[lo + d:lo + 2 * d] -= e
        return out

    return LinearMap(apply, adjoint, A.m + d, A.n, math.sqrt(A.L_A ** 2 + 2.0), 0.0, A.sigma_min,
                     kind="chain_dup", params={"N": N, "d": d, "block": block})


def _check_budget(kappa_A, k_budget):
    if kappa_A < 1:
        raise ParameterError(f"kappa_A must be >= 1, got {kappa_A}")
    N = int(math.floor((kappa_A + 1) / 2))
    K = (int(k_budget) - 2) // (N + 1) + 1
    if K < 1:
        raise ParameterError(f"k_budget={k_budget} leaves no chain coordinates")
    return N, K


# ---------------------------------------------------------------------------
# strongly convex chain


class ScChainInstance:
    """Quadratic chain with ``G(u,v) = (L-mu)/4 G0(u,v) + mu/2 (|u|^2 + |v|^2)``.

    ``G0(u,v) = (alpha - u_1)^2 + sum_{i<d} (v_i - u_{i+1})^2``. The optimum is
    the same vector in every block and is available in closed form.
    """

    def __init__(self, N, d, L_f, mu_f, alpha=1.0):
        if not (L_f > mu_f > 0):
            raise ParameterError(f"need L_f > mu_f > 0, got L_f={L_f}, mu_f={mu_f}")
        if N < 1 or d < 1:
            raise ParameterError("need N, d >= 1")
        self.N, self.d = int(N), int(d)
        self.L_f, self.mu_f, self.alpha = float(L_f), float(mu_f), float(alpha)
        self.A = build_chain_matrix(self.N, self.d)

    @property
    def n(self):
        return 2 * self.N * self.d

    @property
    def kappa_f(self):
        return self.L_f / self.mu_f

    @property
    def q(self):
        s = math.sqrt(self.kappa_f)
        return (s - 1.0) / (s + 1.0)

    @property
    def beta(self):
        return 4.0 * self.mu_f / (self.L_f - self.mu_f)

    def component(self, u, v):
        c = 0.25 * (self.L_f - self.mu_f)
        g0 = (self.alpha - u[0]) ** 2 + float(np.sum((v[:-1] - u[1:]) ** 2))
        return c * g0 + 0.5 * self.mu_f * (float(u @ u) + float(v @ v))

    def value(self, x):
        X = x.reshape(2 * self.N, self.d)
        U, V = X[:self.N], X[self.N:]
        c = 0.25 * (self.L_f - self.mu_f)
        g0 = np.sum((self.alpha - U[:, 0]) ** 2) + np.sum((V[:, :-1] - U[:, 1:]) ** 2)
        return float(c * g0 + 0.5 * self.mu_f * np.sum(X * X))

    def gradient(self, x):
        N = self.N
        X = x.reshape(2 * N, self.d)
        U, V = X[:N], X[N:]
        c2 = 0.5 * (self.L_f - self.mu_f)
        G = self.mu_f * X
        GU, GV = G[:N], G[N:]
        GU[:, 0] -= c2 * (self.alpha - U[:, 0])
        diff = V[:, :-1] - U[:, 1:]
        GU[:, 1:] -= c2 * diff
        GV[:, :-1] += c2 * diff
        return G.reshape(-1)

    def objective(self, L_f=None, mu_f=None):
        return SmoothObjective(self.value, self.gradient, self.L_f if L_f is None else L_f,
                               self.mu_f if mu_f is None else mu_f, self.n, name="chain_sc")

    def optimal_block(self):
        """Closed-form common block ``v*_i = alpha (q^i + q^(2d+1-i)) / (1 + q^(2d+1))``."""
        q, d = self.q, self.d
        i = np.arange(1, d + 1)
        return self.alpha * (q ** i + q ** (2 * d + 1 - i)) / (1.0 + q ** (2 * d + 1))

    def closed_form_optimum(self):
        return np.tile(self.optimal_block(), 2 * self.N)

    def optimal_value(self):
        v = self.optimal_block()
        return self.N * self.component(v, v)

    def dual_optimum(self):
        """Multiplier with ``grad f0(x*) + A' lambda* = 0`` (unique since A has full row rank)."""
        g = self.gradient(self.closed_form_optimum())
        return -self.A.solve_gram(self.A.apply(g))

    def problem(self, declared_mu=None, meta=None):
        f = self.objective(mu_f=declared_mu)
        m = {"kind": "chain_sc", "N": self.N, "d": self.d, "L_f": self.L_f,
             "mu_f": self.mu_f, "alpha": self.alpha, "instance": self}
        m.update(meta or {})
        return CompositeProblem(f, indicator_zero(), self.A, np.zeros(self.A.m), meta=m)

    def scaled_to(self, D):
        """Copy with ``alpha`` chosen so that ``||0 - x*|| = D``."""
        unit = ScChainInstance(self.N, self.d, self.L_f, self.mu_f, 1.0)
        r = np.linalg.norm(unit.closed_form_optimum())
        return ScChainInstance(self.N, self.d, self.L_f, self.mu_f, D / r)


def sc_chain(N, d, L_f, mu_f, D):
    """`ScChainInstance` on explicit (N, d) with ``||x*|| = D``."""
    return ScChainInstance(N, d, L_f, mu_f).scaled_to(D)


def make_sc_instance(L_f, mu_f, kappa_A, k_budget, D):
    """Strongly convex hard instance sized for an iteration budget.

    ``N = floor((kappa_A+1)/2)``, ``K = floor((k-2)/(N+1)) + 1``, ``d = 2K``
    and ``alpha`` scaled so ``||x0 - x*|| = D`` from ``x0 = 0``.

    Returns
    -------
    (ScChainInstance, CompositeProblem)
    """
    if not (L_f > mu_f > 0):
        raise ParameterError(f"need L_f > mu_f > 0, got L_f={L_f}, mu_f={mu_f}")
    if not D > 0:
        raise ParameterError("D must be positive")
    N, K = _check_budget(kappa_A, k_budget)
    if k_budget < N:
        raise ParameterError(f"k_budget must be >= floor((kappa_A+1)/2) = {N}")
    inst = sc_chain(N, 2 * K, L_f, mu_f, D)
    return inst, inst.problem(meta={"K": K, "k_budget": int(k_budget), "kappa_A": float(kappa_A), "D": D})


def make_c_instance(L_f, kappa_A, k_budget, D):
    """Convex reduction: the strongly convex chain with ``mu_f = L_f/(K+1)^2``.

    The returned problem declares ``mu_f = 0`` so convex solvers treat it as
    merely convex; the instance keeps the true modulus for closed forms.
    """
    if not (L_f > 0 and D > 0):
        raise ParameterError("need L_f, D > 0")
    N, K = _check_budget(kappa_A, k_budget)
    if k_budget < kappa_A:
        raise ParameterError(f"k_budget must be >= kappa_A = {kappa_A}")
    inst = sc_chain(N, 2 * K, L_f, L_f / (K + 1) ** 2, D)
    meta = {"kind": "chain_c", "K": K, "k_budget": int(k_budget), "kappa_A": float(kappa_A), "D": D}
    return inst, inst.problem(declared_mu=0.0, meta=meta)


# ---------------------------------------------------------------------------
# non-convex chain


def psi(x):
    """``exp(1 - 1/(2x-1)^2)`` for ``x > 1/2`` and exactly 0 otherwise."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    m = x > 0.5
    t = 2.0 * x[m] - 1.0
    out[m] = np.exp(1.0 - 1.0 / (t * t))
    return out


def dpsi(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    m = x > 0.5
    t = 2.0 * x[m] - 1.0
    out[m] = np.exp(1.0 - 1.0 / (t * t)) * 4.0 / (t * t * t)
    return out


def phi(x):
    """``sqrt(e) * int_{-inf}^x exp(-t^2/2) dt``."""
    return _PHI_SCALE * ndtr(np.asarray(x, dtype=np.float64))


def dphi(x):
    x = np.asarray(x, dtype=np.float64)
    return _SQRT_E * np.exp(-0.5 * x * x)


class NcChainInstance:
    """Non-convex chain with ``G(u,v) = (L alpha^2 / l0) G0(u/alpha, v/alpha)`` and

    ``G0(u,v) = -Psi(1)Phi(u_1) + sum_{i>=2} [Psi(-v_{i-1})Phi(-u_i) - Psi(v_{i-1})Phi(u_i)]``.
    """

    l0 = L0

    def __init__(self, N, d, L_f, alpha):
        if N < 1 or d < 1:
            raise ParameterError("need N, d >= 1")
        if not (L_f > 0 and alpha > 0):
            raise ParameterError("need L_f, alpha > 0")
        self.N, self.d = int(N), int(d)
        self.L_f, self.alpha = float(L_f), float(alpha)
        self.A = build_chain_matrix(self.N, self.d)

    @property
    def n(self):
        return 2 * self.N * self.d

    @property
    def scale(self):
        return self.L_f * self.alpha ** 2 / self.l0

    @staticmethod
    def g0_parts(U, V):
        """``G0`` and its partial gradients, row-wise over stacked (u, v) pairs."""
        val = -phi(U[..., 0])
        gu = np.zeros_like(U)
        gv = np.zeros_like(V)
        gu[..., 0] = -dphi(U[..., 0])
        if U.shape[-1] > 1:
            vm, ui = V[..., :-1], U[..., 1:]
            p_neg, p_pos = psi(-vm), psi(vm)
            val = val + np.sum(p_neg * phi(-ui) - p_pos * phi(ui), axis=-1)
            gu[..., 1:] = -p_neg * dphi(-ui) - p_pos * dphi(ui)
            gv[..., :-1] = -dpsi(-vm) * phi(-ui) - dpsi(vm) * phi(ui)
        return val, gu, gv

    def component(self, u, v):
        a = self.alpha
        val, _, _ = self.g0_parts(np.atleast_2d(u / a), np.atleast_2d(v / a))
        return self.scale * float(val[0])

    def value(self, x):
        X = x.reshape(2 * self.N, self.d) / self.alpha
        val, _, _ = self.g0_parts(X[:self.N], X[self.N:])
        return self.scale * float(np.sum(val))

    def gradient(self, x):
        X = x.reshape(2 * self.N, self.d) / self.alpha
        _, gu, gv = self.g0_parts(X[:self.N], X[self.N:])
        c = self.L_f * self.alpha / self.l0
        return (c * np.concatenate([gu, gv])).reshape(-1)

    def g_value(self, v):
        """``g(v) = G(v, v)``."""
        return self.component(v, v)

    def g_gradient(self, v):
        a = self.alpha
        w = np.atleast_2d(np.asarray(v, dtype=np.float64) / a)
        _, gu, gv = self.g0_parts(w, w)
        return (self.L_f * a / self.l0) * (gu + gv)[0]

    def gap_bound(self):
        """Certified ``f0(0) - inf f0 <= 12 N d L alpha^2 / l0``."""
        return 12.0 * self.N * self.d * self.scale

    def gradient_floor(self):
        """``L alpha / l0``: lower bound on ``||grad g(v)||`` whenever ``v_d = 0``."""
        return self.L_f * self.alpha / self.l0

    def objective(self):
        return SmoothObjective(self.value, self.gradient, self.L_f, 0.0, self.n, name="chain_nc")

    def problem(self, meta=None):
        m = {"kind": "chain_nc", "N": self.N, "d": self.d, "L_f": self.L_f,
             "alpha": self.alpha, "instance": self}
        m.update(meta or {})
        return CompositeProblem(self.objective(), indicator_zero(), self.A, np.zeros(self.A.m), meta=m)


def nc_chain(N, d, L_f, Delta):
    """`NcChainInstance` on explicit (N, d) with ``alpha = sqrt(l0 Delta / (12 N d L))``."""
    if not Delta > 0:
        raise ParameterError("Delta must be positive")
    alpha = math.sqrt(L0 * Delta / (12.0 * N * d * L_f))
    return NcChainInstance(N, d, L_f, alpha)


def make_nc_instance(L_f, Delta, kappa_A, k_budget):
    """Non-convex hard instance: ``d = K + 2`` and ``F(0) - inf F <= Delta``.

    Returns
    -------
    (NcChainInstance, CompositeProblem)
    """
    if not (L_f > 0 and Delta > 0):
        raise ParameterError("need L_f, Delta > 0")
    N, K = _check_budget(kappa_A, k_budget)
    if k_budget < kappa_A:
        raise ParameterError(f"k_budget must be >= kappa_A = {kappa_A}")
    inst = nc_chain(N, K + 2, L_f, Delta)
    meta = {"K": K, "k_budget": int(k_budget), "kappa_A": float(kappa_A), "Delta": Delta}
    return inst, inst.problem(meta=meta)


# ---------------------------------------------------------------------------
# random test problems


def kkt_solve(Q, c, M, b):
    """Primal-dual solution of ``min 0.5 x'Qx + c'x s.t. Mx = b`` by a dense KKT solve."""
    Q, M = np.asarray(Q, dtype=np.float64), np.asarray(M, dtype=np.float64)
    n, m = Q.shape[0], M.shape[0]
    K = np.block([[Q, M.T], [M, np.zeros((m, m))]])
    sol = np.linalg.lstsq(K, np.concatenate([-np.asarray(c, float), np.asarray(b, float)]), rcond=None)[0]
    return sol[:n], sol[n:]


def random_equality_qp(n, m, seed=0, rank=None, strongly_convex=False):
    """Random feasible ``min 0.5 x'Qx + c'x s.t. Ax = b`` with its KKT pair.

    ``Q = B'B / n`` with ``B`` of ``rank`` rows (default ``n`` when strongly
    convex, ``max(n // 2, n - m)`` otherwise) and ``A`` of i.i.d. normal
    entries scaled by ``1/sqrt(n)``. A rank below ``n - m`` would leave a
    feasible direction of zero curvature, so the problem could be unbounded.

    Returns
    -------
    problem, x_star, lambda_star
    """
    rng = np.random.default_rng(seed)
    r = (n if strongly_convex else max(n // 2, n - m)) if rank is None else int(rank)
    if not n - m <= r <= n:
        raise ParameterError(f"rank must lie in [n - m, n] = [{n - m}, {n}], got {r}")
    B = rng.standard_normal((r, n))
    Q = B.T @ B / n
    if strongly_convex:
        Q += 0.1 * np.eye(n)
    c = rng.standard_normal(n)
    M = rng.standard_normal((m, n)) / math.sqrt(n)
    b = M @ rng.standard_normal(n)
    f = quadratic(Q, c, mu_f=None if strongly_convex else 0.0)
    problem = CompositeProblem(f, indicator_zero(), dense_map(M), b,
                               meta={"kind": "random_qp", "seed": seed})
    x_star, lam_star = kkt_solve(Q, c, M, b)
    return problem, x_star, lam_star


def random_nonconvex(n, m, seed=0, terms=None, weight=0.1):
    """Smooth non-convex ``f(x) = (w/2)||x||^2 + sum_i c_i (1 - cos(a_i'x + p_i))`` under ``Ax = b``.

    ``f >= 0``, so ``F(x0) - inf F <= F(x0)`` for any feasible ``x0``; the
    returned ``x0`` is the least-norm feasible point.

    Returns
    -------
    problem, x0
    """
    rng = np.random.default_rng(seed)
    r = 2 * n if terms is None else terms
    W = rng.standard_normal((r, n)) / math.sqrt(n)
    ph = rng.uniform(0, 2 * np.pi, r)
    cw = rng.uniform(0.5, 1.5, r)
    L_f = weight + float(np.linalg.norm(W.T @ (cw[:, None] * W), 2))

    def value(x):
        return 0.5 * weight * float(x @ x) + float(cw @ (1.0 - np.cos(W @ x + ph)))

    def gradient(x):
        return weight * x + W.T @ (cw * np.sin(W @ x + ph))

    f = SmoothObjective(value, gradient, L_f, 0.0, n, name="random_nonconvex")
    M = rng.standard_normal((m, n)) / math.sqrt(n)
    b = M @ rng.standard_normal(n)
    x0 = np.linalg.lstsq(M, b, rcond=None)[0]
    return CompositeProblem(f, indicator_zero(), dense_map(M), b, meta={"kind": "random_nc"}), x0
