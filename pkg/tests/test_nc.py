import math

import numpy as np
import pytest

from composolve import (CompositeProblem, NcConfig, ParameterError, identity_map, indicator_zero,
                        nc_chain, quadratic, random_nonconvex, solve_nc, subopt_nc)
from composolve.nc import nc_tolerance, proximal_subproblem, rate_bound


def test_tolerance_arithmetic():
    assert nc_tolerance(2, 4.0, 1.0) == pytest.approx(0.5)


def test_convex_quadratic_stationarity_vanishes():
    c = np.array([1.0, -2.0])
    p = CompositeProblem(quadratic(np.eye(2), -c), indicator_zero(), identity_map(2), c)
    trace, best_k = solve_nc(p, NcConfig(10, 2.5, np.zeros(2)))
    s = trace.column("subopt_nc")
    assert s.min() <= 1e-8
    assert s.min() <= rate_bound(1.0, 2.5, 10)
    assert s[best_k - 1] == s.min()


def test_chain_instance_rate():
    inst = nc_chain(2, 5, 1.0, 1.0)
    trace, best_k = solve_nc(inst.problem(), NcConfig(50, 1.0, np.zeros(inst.n)))
    assert trace.meta["best_subopt_nc"] <= math.sqrt(5 * 1.0 * 1.0 / 50)
    assert trace.meta["best_k"] == best_k


def test_random_nonconvex_rate():
    p, x0 = random_nonconvex(12, 5, seed=0)
    dp = p.f.value(x0)
    trace, _ = solve_nc(p, NcConfig(20, dp, x0))
    s = trace.column("subopt_nc")
    for T in (5, 10, 20):
        assert s[:T].min() <= rate_bound(p.f.L_f, dp, T)
    assert np.all(np.isfinite(trace.column("f")))


def test_subproblem_moduli():
    p, x0 = random_nonconvex(6, 2, seed=1)
    sub = proximal_subproblem(p, x0)
    L = p.f.L_f
    assert sub.f.L_f == pytest.approx(3 * L)
    assert sub.f.mu_f == pytest.approx(L)
    x = x0 + 0.3
    assert sub.f.value(x) == pytest.approx(p.f.value(x) + L * 0.09 * 6)


def test_trace_counters_accumulate_across_subproblems():
    inst = nc_chain(1, 3, 1.0, 1.0)
    trace, _ = solve_nc(inst.problem(), NcConfig(5, 1.0, np.zeros(inst.n)))
    g = trace.column("grad_f")
    assert np.all(np.diff(g) > 0)


def test_config_validation():
    with pytest.raises(ParameterError):
        NcConfig(0, 1.0, np.zeros(2))
    with pytest.raises(ParameterError):
        NcConfig(5, 0.0, np.zeros(2))
    with pytest.raises(ParameterError):
        NcConfig(5, 1.0, np.zeros(2), tolerance_scale=0.0)


def test_coarser_subproblem_tolerance_is_deterministic():
    p, x0 = random_nonconvex(8, 3, seed=2)
    dp = p.f.value(x0)
    a, _ = solve_nc(p, NcConfig(10, dp, x0, tolerance_scale=10.0))
    b, _ = solve_nc(p, NcConfig(10, dp, x0, tolerance_scale=10.0))
    assert a.to_csv() == b.to_csv()
