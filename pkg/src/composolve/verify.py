"""Self-check suite: structural certificates, rate bounds and lower-bound mechanics.

Each check returns a `CheckResult`; `run_checks` runs them all with a fixed
seed. ``inject`` deliberately breaks one ingredient so that the suite can be
shown to catch it.
"""

import math
from dataclasses import dataclass

import numpy as np

from .agd import AgdSpec, agd
from .baselines import SingleLoopConfig, run_single_loop
from .cvx import AppaConfig, solve_c_appa
from .instances import nc_chain, random_equality_qp, random_nonconvex, sc_chain
from .measures import chain_depth, check_support, q2k_floor, subopt_nc
from .nc import NcConfig, rate_bound, solve_nc
from .problem import euclidean_norm, indicator_nonpositive, indicator_zero, l1_norm
from .prox import SurrogateSpec, h_rho_value, prox_conjugate_scaled
from .sc import ScConfig, solve_sc

INJECTIONS = ("wrong_q", "nc_delta_x10")


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  {self.detail}"


def _fd_error(fun, grad, x, h=1e-6):
    g = grad(x)
    fd = np.empty_like(x)
    e = np.zeros_like(x)
    for i in range(x.size):
        e[i] = h
        fd[i] = (fun(x + e) - fun(x - e)) / (2 * h)
        e[i] = 0.0
    return np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1e-12)


def check_adjoint(rng):
    worst = 0.0
    for N, d in ((1, 1), (2, 3), (4, 8)):
        A = sc_chain(N, d, 1.0, 0.1, 1.0).A
        for _ in range(10):
            x, y = rng.standard_normal(A.n), rng.standard_normal(A.m)
            lhs, rhs = A.apply(x) @ y, x @ A.adjoint(y)
            worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1e-300))
    return CheckResult("chain adjoint consistency", worst <= 1e-10, f"max rel err {worst:.2e}")


def check_chain_spectrum(rng):
    worst, cond_ok = 0.0, True
    for N in range(1, 7):
        A = sc_chain(N, 2, 1.0, 0.1, 1.0).A
        M = A.to_dense()
        ev = np.sort(np.linalg.eigvalsh(M @ M.T))
        ref = np.sort(np.repeat(A.gram_eigenvalues(), 2))
        worst = max(worst, float(np.max(np.abs(ev - ref))))
        s = np.linalg.svd(M, compute_uv=False)
        cond_ok &= s[0] / s[-1] <= math.sqrt(2 * N * N - 1) * (1 + 1e-12)
        cond_ok &= abs(s[-1] - A.sigma_min) <= 1e-10 and s[0] <= A.L_A
    return CheckResult("chain spectrum and condition bound", worst <= 1e-10 and bool(cond_ok),
                       f"max eigenvalue err {worst:.2e}")


def check_moreau(rng):
    worst = 0.0
    for h in (indicator_zero(), indicator_nonpositive(), euclidean_norm(), l1_norm(0.7)):
        for _ in range(20):
            w, ell = rng.standard_normal(5) * 3, rng.uniform(0.1, 5)
            rec = h.prox(ell, ell * w) / ell + prox_conjugate_scaled(h, ell, w)
            worst = max(worst, float(np.max(np.abs(rec - w))))
    return CheckResult("Moreau decomposition", worst <= 1e-12, f"max err {worst:.2e}")


def check_surrogate(rng):
    ok = True
    for h, rho in ((indicator_zero(), 2.0), (indicator_nonpositive(), 1.5), (euclidean_norm(), 1.0),
                   (l1_norm(), 3.0)):
        spec = SurrogateSpec(rho)
        for _ in range(20):
            z, zp = rng.standard_normal(4), rng.standard_normal(4)
            a, b = h_rho_value(h, spec, z), h_rho_value(h, spec, zp)
            ok &= abs(a - b) <= rho * np.linalg.norm(z - zp) + 1e-12
            hv = h.value(z)
            ok &= (not np.isfinite(hv)) or a <= hv + 1e-12
    return CheckResult("surrogate Lipschitz and lower bound", bool(ok))


def check_agd(rng):
    ok, worst = True, 0.0
    for _ in range(5):
        n = 8
        ev = np.concatenate([[1.0, 50.0], rng.uniform(1, 50, n - 2)])
        Qb = np.linalg.qr(rng.standard_normal((n, n)))[0]
        Q = Qb @ np.diag(ev) @ Qb.T
        c = rng.standard_normal(n)
        y_star = np.linalg.solve(Q, -c)
        y0 = rng.standard_normal(n)
        spec = AgdSpec(50.0, 1.0, 1e-8)
        y, it = agd(lambda y: Q @ y + c, y0, spec)
        ok &= np.linalg.norm(y - y_star) <= 1e-8
        bound = spec.iteration_bound(np.linalg.norm(y0 - y_star)) + 1
        ok &= it <= bound
        worst = max(worst, it / bound)
    return CheckResult("accelerated gradient distance and iteration bound", bool(ok),
                       f"max iters/bound {worst:.3f}")


def check_gradients(rng):
    worst = 0.0
    for inst in (sc_chain(2, 5, 1.0, 0.1, 1.0), nc_chain(2, 5, 1.0, 1.0)):
        for _ in range(10):
            x = rng.standard_normal(inst.n) * (inst.alpha if hasattr(inst, "l0") else 1.0)
            worst = max(worst, _fd_error(inst.value, inst.gradient, x))
    return CheckResult("finite-difference gradients of chain objectives", worst <= 1e-5,
                       f"max rel err {worst:.2e}")


def check_zero_chain(rng):
    ok = True
    for inst in (sc_chain(1, 6, 1.0, 0.1, 1.0), nc_chain(1, 6, 1.0, 1.0)):
        for i in range(0, 6):
            u = np.zeros(6)
            v = np.zeros(6)
            u[:i + 1] = rng.standard_normal(i + 1) * 2
            v[:i] = rng.standard_normal(i) * 2
            g = inst.gradient(np.concatenate([u, v]) * getattr(inst, "alpha", 1.0))
            ok &= np.all(g[i + 1:6] == 0.0) and np.all(g[6 + i:] == 0.0)
    return CheckResult("zero-chain gradient supports", bool(ok))


def check_tail_mass(rng):
    ok = True
    for d in (4, 10, 25):
        for kf in (4.0, 25.0, 400.0):
            inst = sc_chain(1, d, 1.0, 1.0 / kf, 1.0)
            v = inst.optimal_block()
            tot = float(v @ v)
            for K in range(d):
                ok &= float(v[K:] @ v[K:]) >= inst.q ** (2 * K) * (d - K) / d * tot * (1 - 1e-12)
    return CheckResult("optimum tail-mass inequality", bool(ok))


def check_sc_rates(rng):
    inst = sc_chain(2, 8, 1.0, 1.0 / 16, 1.0)
    p = inst.problem()
    xs, ls = inst.closed_form_optimum(), inst.dual_optimum()
    rep = solve_sc(p, np.zeros(inst.n), ScConfig(1e-6, D=1.0), reference=(xs, ls))
    e = rep.extra
    M = max(float(np.linalg.norm(ls)), 10.0 * p.A.L_A / e["mu_phi"] * e["D"])
    dl, dx, dk = (rep.trace.column(c) for c in ("dist_lam", "dist_x", "delta"))
    k = np.arange(1, dl.size + 1)
    dual_ok = bool(np.all(dl <= 1.05 * (1 - e["rho"]) ** (k / 2) * M))
    lam_prev = np.concatenate([[np.linalg.norm(ls)], dl[:-1]])
    tie_ok = bool(np.all(dx <= 1.05 * (p.A.L_A / p.f.mu_f * lam_prev + dk)))
    return CheckResult("strongly convex dual rate and primal tie", dual_ok and tie_ok,
                       f"final dist {dx[-1]:.2e}")


def check_lower_bounds(rng, inject=None):
    ok_support, ok_q2k = True, True
    for N in (1, 2, 3):
        d = 12
        inst = sc_chain(N, d, 1.0, 1.0 / 16, 1.0)
        p = inst.problem()
        xs = inst.closed_form_optimum()
        d0 = float(xs @ xs)
        # the injected formula swaps numerator and denominator
        q = 1.0 / inst.q if inject == "wrong_q" else inst.q
        kmax = 5 * (N + 1)
        runs = []
        for m in ("chambolle_pock", "ogda", "linearized_alm"):
            tr = run_single_loop(p, np.zeros(inst.n), np.zeros(inst.A.m),
                                 SingleLoopConfig(m, T=kmax, record_iterates=True))
            runs.append(tr.iterates)
        its = []

        def grab(y):
            if len(its) < kmax:
                its.append(y.copy())
        solve_sc(p, np.zeros(inst.n), ScConfig(1e-3, D=1.0), callback=grab)
        runs.append(its)
        for seq in runs:
            for k, x in enumerate(seq[:kmax], 1):
                ok_support &= check_support(x, k, N, d)
                ok_q2k &= float((x - xs) @ (x - xs)) >= q2k_floor(q, chain_depth(k, N), d0)
    return [CheckResult("zero-chain support pattern of iterates", bool(ok_support)),
            CheckResult("distance lower bound on chain iterates", bool(ok_q2k))]


def check_nc_rate(rng, inject=None):
    scale = 10.0 if inject == "nc_delta_x10" else 1.0
    ok, worst = True, 0.0
    cases = [(nc_chain(2, 5, 1.0, 1.0), None, 1.0)]
    p, x0 = random_nonconvex(12, 5, seed=int(rng.integers(1 << 30)))
    cases.append((None, (p, x0), p.f.value(x0)))
    for inst, px, dp in cases:
        prob, x0 = (inst.problem(), np.zeros(inst.n)) if inst is not None else px
        tr, _ = solve_nc(prob, NcConfig(50, dp, x0, tolerance_scale=scale))
        s = tr.column("subopt_nc")
        for T in (10, 50):
            r = s[:T].min() / rate_bound(prob.f.L_f, dp, T)
            ok &= r <= 1.0
            worst = max(worst, r)
    return CheckResult("non-convex stationarity rate", bool(ok), f"max ratio {worst:.3g}")


def check_nc_lower(rng):
    inst = nc_chain(2, 5, 1.0, 1.0)
    p = inst.problem()
    ok = True
    for _ in range(10):
        X = rng.standard_normal((4, 5)) * inst.alpha
        X[:, -1] = 0.0
        x = X.reshape(-1)
        xbar = X.mean(axis=0)
        lhs = subopt_nc(x, p)
        gg = np.linalg.norm(inst.g_gradient(xbar))
        ok &= lhs >= math.sqrt(2) / 4 * gg * (1 - 1e-9)
        ok &= gg >= inst.gradient_floor() * (1 - 1e-9)
    return CheckResult("non-convex stationarity floor on chain", bool(ok))


def check_appa_rate(rng):
    p, xs, ls = random_equality_qp(12, 6, seed=int(rng.integers(1 << 30)))
    D = float(np.linalg.norm(xs))
    rep = solve_c_appa(p, np.zeros(12), AppaConfig(30, D), reference=(xs, ls))
    v = rep.trace.column("v")
    k = np.arange(1, v.size + 1)
    r = float(np.max(v / (16 * p.f.L_f * D * D / (k + 1) ** 2)))
    return CheckResult("accelerated proximal-point objective rate", r <= 1.0, f"max ratio {r:.3g}")


def run_checks(seed=42, inject=None):
    """Run every check; returns a list of `CheckResult`."""
    if inject is not None and inject not in INJECTIONS:
        raise ValueError(f"unknown injection {inject!r}; choose from {INJECTIONS}")
    rng = np.random.default_rng(seed)
    out = [check_adjoint(rng), check_chain_spectrum(rng), check_moreau(rng), check_surrogate(rng),
           check_agd(rng), check_gradients(rng), check_zero_chain(rng), check_tail_mass(rng),
           check_sc_rates(rng)]
    out += check_lower_bounds(rng, inject)
    out += [check_nc_rate(rng, inject), check_nc_lower(rng), check_appa_rate(rng)]
    return out
