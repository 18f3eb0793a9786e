"""Data model for composite problems ``min_x f(x) + h(Ax - b)``."""

from dataclasses import dataclass, replace, field
from typing import Callable, Optional

import numpy as np

from .errors import ParameterError

#: absolute tolerance used to decide membership in the domain of indicator kinds
DOM_TOL = 1e-12

PROX_KINDS = (
    "indicator_zero",
    "indicator_nonpositive_orthant",
    "indicator_cone_with_projection",
    "euclidean_norm",
    "l1_norm",
    "custom",
)
CONE_KINDS = ("indicator_zero", "indicator_nonpositive_orthant", "indicator_cone_with_projection")


def as_vector(x):
    return np.ascontiguousarray(x, dtype=np.float64).reshape(-1)


# ---------------------------------------------------------------------------
# smooth part


@dataclass(frozen=True)
class SmoothObjective:
    """Value/gradient oracle with declared smoothness ``L_f`` and modulus ``mu_f``.

    ``mu_f = 0`` means merely convex (or no convexity claim at all, as in the
    non-convex solver). The moduli are trusted inputs; `validate` spot-checks
    them on random samples.
    """

    value: Callable
    gradient: Callable
    L_f: float
    mu_f: float
    dim: int
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.L_f > 0:
            raise ParameterError(f"L_f must be positive, got {self.L_f}")
        if self.mu_f < 0:
            raise ParameterError(f"mu_f must be nonnegative, got {self.mu_f}")
        if self.dim < 1:
            raise ParameterError(f"dim must be positive, got {self.dim}")

    @property
    def kappa(self):
        return self.L_f / self.mu_f if self.mu_f > 0 else np.inf

    def with_moduli(self, L_f=None, mu_f=None):
        """Copy with the declared constants replaced (oracles unchanged)."""
        return replace(
            self,
            L_f=self.L_f if L_f is None else float(L_f),
            mu_f=self.mu_f if mu_f is None else float(mu_f),
        )


def quadratic(Q, c=None, L_f=None, mu_f=None, name="quadratic"):
    """``f(x) = 0.5 x'Qx + c'x`` with moduli taken from the spectrum of ``Q``."""
    Q = np.array(Q, dtype=np.float64)
    Q = 0.5 * (Q + Q.T)
    n = Q.shape[0]
    c = np.zeros(n) if c is None else as_vector(c)
    eig = np.linalg.eigvalsh(Q)
    if L_f is None:
        L_f = max(float(np.max(np.abs(eig))), np.finfo(float).tiny)
    if mu_f is None:
        mu_f = max(float(eig[0]), 0.0)

    def value(x):
        return 0.5 * float(x @ (Q @ x)) + float(c @ x)

    def gradient(x):
        return Q @ x + c

    return SmoothObjective(value, gradient, float(L_f), float(mu_f), n, name=name,
                           params={"Q": Q, "c": c})


def squared_distance(center, weight=1.0):
    """``f(u) = (weight/2) ||u - center||^2``; exactly ``weight``-smooth and strongly convex."""
    center = as_vector(center)
    w = float(weight)

    def value(u):
        r = u - center
        return 0.5 * w * float(r @ r)

    def gradient(u):
        return w * (u - center)

    return SmoothObjective(value, gradient, w, w, center.size, name="squared_distance")


# ---------------------------------------------------------------------------
# linear map


@dataclass(frozen=True)
class LinearMap:
    """Matrix-free linear map R^n -> R^m with certified spectral bounds.

    ``L_A`` bounds the operator norm, ``sigma_min`` the smallest singular value
    (0 when A is not of full row rank) and ``sigma_min_nz`` the smallest
    nonzero singular value.
    """

    apply: Callable
    adjoint: Callable
    m: int
    n: int
    L_A: float
    sigma_min: float = 0.0
    sigma_min_nz: Optional[float] = None
    kind: str = "custom"
    matrix: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    params: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.L_A > 0:
            raise ParameterError(f"L_A must be positive, got {self.L_A}")
        if self.sigma_min < 0:
            raise ParameterError("sigma_min must be nonnegative")
        if self.sigma_min_nz is None:
            object.__setattr__(self, "sigma_min_nz", float(self.sigma_min))

    @property
    def kappa(self):
        return self.L_A / self.sigma_min if self.sigma_min > 0 else np.inf

    @property
    def kappa_nz(self):
        return self.L_A / self.sigma_min_nz if self.sigma_min_nz > 0 else np.inf

    def to_dense(self):
        """Materialize the matrix by applying the map to unit vectors."""
        if self.matrix is not None:
            return self.matrix
        M = np.empty((self.m, self.n))
        e = np.zeros(self.n)
        for j in range(self.n):
            e[j] = 1.0
            M[:, j] = self.apply(e)
            e[j] = 0.0
        return M


def dense_map(M, L_A=None, sigma_min=None, sigma_min_nz=None, rank_tol=1e-10):
    """Wrap an explicit matrix; missing bounds are filled from its SVD."""
    M = np.array(M, dtype=np.float64, ndmin=2)
    m, n = M.shape
    if L_A is None or sigma_min is None or sigma_min_nz is None:
        s = np.linalg.svd(M, compute_uv=False)
        smax = float(s[0]) if s.size else 0.0
        nz = s[s > rank_tol * max(smax, 1.0)]
        full_row_rank = m <= n and nz.size == m
        if L_A is None:
            L_A = smax
        if sigma_min is None:
            sigma_min = float(s[-1]) if full_row_rank else 0.0
        if sigma_min_nz is None:
            sigma_min_nz = float(nz[-1]) if nz.size else 0.0
    MT = np.ascontiguousarray(M.T)
    return LinearMap(lambda x: M @ x, lambda y: MT @ y, m, n, float(L_A), float(sigma_min),
                     float(sigma_min_nz), kind="dense", matrix=M)


def identity_map(n):
    return dense_map(np.eye(n), L_A=1.0, sigma_min=1.0, sigma_min_nz=1.0)


def estimate_norm(A, iters=200, seed=0):
    """Power-iteration estimate of ``||A||`` (for validation, not certification)."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(A.n)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = A.adjoint(A.apply(x))
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        est = np.sqrt(ny)
        x = y / ny
    return float(est)


# ---------------------------------------------------------------------------
# prox-capable regularizer


@dataclass(frozen=True)
class ProxFunction:
    """Convex ``h`` given by its value and ``prox(t, z) = argmin_u t*h(u) + 0.5||z-u||^2``.

    Cone kinds also carry ``polar_projection``, the Euclidean projection onto
    the polar cone, which is what the Lipschitz surrogate of ``h`` needs.
    """

    kind: str
    value: Callable
    prox: Callable
    polar_projection: Optional[Callable] = None
    params: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in PROX_KINDS:
            raise ParameterError(f"unknown regularizer kind {self.kind!r}")
        if self.kind in CONE_KINDS and self.polar_projection is None:
            raise ParameterError(f"{self.kind} requires a polar-cone projection")

    @property
    def is_cone(self):
        return self.kind in CONE_KINDS


def indicator_zero():
    """Indicator of ``{0}``: turns the problem into ``min f(x) s.t. Ax = b``."""

    def value(z):
        return 0.0 if np.max(np.abs(z), initial=0.0) <= DOM_TOL else np.inf

    return ProxFunction("indicator_zero", value, lambda t, z: np.zeros_like(z),
                        polar_projection=lambda z: np.array(z, dtype=np.float64))


def indicator_nonpositive():
    """Indicator of the nonpositive orthant: ``Ax - b <= 0``."""

    def value(z):
        return 0.0 if np.max(z, initial=-np.inf) <= DOM_TOL else np.inf

    return ProxFunction("indicator_nonpositive_orthant", value, lambda t, z: np.minimum(z, 0.0),
                        polar_projection=lambda z: np.maximum(z, 0.0))


def indicator_cone(project, polar_project, name="cone"):
    """Indicator of a closed convex cone given both Euclidean projections."""

    def value(z):
        return 0.0 if np.linalg.norm(z - project(z)) <= DOM_TOL else np.inf

    return ProxFunction("indicator_cone_with_projection", value, lambda t, z: project(z),
                        polar_projection=polar_project, params={"name": name})


def euclidean_norm(weight=1.0):
    """``h(z) = weight * ||z||_2``."""
    w = float(weight)

    def prox(t, z):
        nz = np.linalg.norm(z)
        if nz <= t * w:
            return np.zeros_like(z)
        return (1.0 - t * w / nz) * z

    return ProxFunction("euclidean_norm", lambda z: w * float(np.linalg.norm(z)), prox,
                        params={"weight": w})


def l1_norm(weight=1.0):
    """``h(z) = weight * ||z||_1``."""
    w = float(weight)

    def prox(t, z):
        return np.sign(z) * np.maximum(np.abs(z) - t * w, 0.0)

    return ProxFunction("l1_norm", lambda z: w * float(np.sum(np.abs(z))), prox,
                        params={"weight": w})


def custom_prox(value, prox, polar_projection=None):
    return ProxFunction("custom", value, prox, polar_projection)


# ---------------------------------------------------------------------------
# problem container


@dataclass(frozen=True)
class CompositeProblem:
    """``min_x f(x) + h(Ax - b)``."""

    f: SmoothObjective
    h: ProxFunction
    A: LinearMap
    b: np.ndarray
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "b", as_vector(self.b))

    @property
    def n(self):
        return self.A.n

    @property
    def m(self):
        return self.A.m

    def objective(self, x):
        """``F(x)``; ``inf`` outside the domain of ``h``."""
        return self.f.value(x) + self.h.value(self.A.apply(x) - self.b)

    def residual(self, x):
        return self.A.apply(x) - self.b

    def with_objective(self, f):
        return replace(self, f=f)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str

    def __str__(self):
        return f"[{self.code}] {self.message}"


def validate(problem, samples=20, seed=0, rtol=1e-8):
    """Check dimensions and spot-check declared bounds on random samples.

    Returns a list of `Diagnostic`; an empty list means every check passed.
    Sampling is seeded so the outcome is reproducible.
    """
    f, A, h = problem.f, problem.A, problem.h
    out = []
    if f.dim != A.n:
        out.append(Diagnostic("dim-mismatch", f"f.dim={f.dim} but A.n={A.n}"))
    if problem.b.size != A.m:
        out.append(Diagnostic("dim-mismatch", f"len(b)={problem.b.size} but A.m={A.m}"))
    if f.mu_f > f.L_f:
        out.append(Diagnostic("bound", f"mu_f={f.mu_f} exceeds L_f={f.L_f}"))
    if not (A.sigma_min <= A.sigma_min_nz * (1 + rtol) and A.sigma_min_nz <= A.L_A * (1 + rtol)):
        out.append(Diagnostic("bound", "need sigma_min <= sigma_min_nz <= L_A"))
    if out and any(d.code == "dim-mismatch" for d in out):
        return out

    rng = np.random.default_rng(seed)
    worst_lip = worst_sc = worst_adj = worst_norm = 0.0
    for _ in range(samples):
        x = rng.standard_normal(A.n)
        xp = x + rng.standard_normal(A.n) * rng.uniform(0.01, 2.0)
        dx = x - xp
        dg = f.gradient(x) - f.gradient(xp)
        nd = np.linalg.norm(dx)
        worst_lip = max(worst_lip, np.linalg.norm(dg) / nd)
        if f.mu_f > 0:
            worst_sc = max(worst_sc, f.mu_f - float(dg @ dx) / nd**2)
        y = rng.standard_normal(A.m)
        Ax = A.apply(x)
        lhs, rhs = float(Ax @ y), float(x @ A.adjoint(y))
        worst_adj = max(worst_adj, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
        worst_norm = max(worst_norm, np.linalg.norm(Ax) / np.linalg.norm(x))
    if worst_lip > f.L_f * (1 + 1e-6):
        out.append(Diagnostic("lipschitz", f"sampled gradient Lipschitz ratio {worst_lip:.6g} > L_f={f.L_f}"))
    if worst_sc > f.mu_f * 1e-6:
        out.append(Diagnostic("strong-convexity", f"sampled curvature falls below mu_f={f.mu_f}"))
    if worst_adj > 1e-10:
        out.append(Diagnostic("adjoint", f"adjoint mismatch {worst_adj:.3g}"))
    if worst_norm > A.L_A * (1 + 1e-6):
        out.append(Diagnostic("operator-norm", f"sampled ||Ax||/||x|| = {worst_norm:.6g} > L_A={A.L_A}"))

    for _ in range(min(samples, 5)):
        z = rng.standard_normal(A.m) * 3
        zp = rng.standard_normal(A.m) * 3
        t = rng.uniform(0.1, 3.0)
        if np.linalg.norm(h.prox(t, z) - h.prox(t, zp)) > np.linalg.norm(z - zp) * (1 + 1e-10):
            out.append(Diagnostic("prox", "prox is expansive on a sampled pair"))
            break
    return out
