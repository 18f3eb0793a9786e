import numpy as np
import pytest

from composolve import (CompositeProblem, DivergenceError, ParameterError, SingleLoopConfig,
                        UnsupportedError, dense_map, euclidean_norm, identity_map, indicator_zero,
                        quadratic, run_single_loop, sc_chain)
from composolve.measures import chain_depth, q2k_floor

METHODS = ("chambolle_pock", "ogda", "linearized_alm")


def scalar_problem():
    return CompositeProblem(quadratic([[1.0]]), indicator_zero(), dense_map([[1.0]]), [0.0])


def test_chambolle_pock_scalar_contraction():
    cfg = SingleLoopConfig("chambolle_pock", eta1=0.4, eta2=0.4, T=200, record_iterates=True)
    tr = run_single_loop(scalar_problem(), np.ones(1), np.zeros(1), cfg)
    # iteration matrix of the (x, lambda) recursion
    G = np.array([[0.6, -0.4], [0.4 * (2 * 0.6 - 1), 1 - 0.4 * 2 * 0.4]])
    assert max(abs(np.linalg.eigvals(G))) < 1
    z = np.array([1.0, 0.0])
    for x in tr.iterates[:20]:
        z = G @ z
        assert x[0] == pytest.approx(z[0], abs=1e-14)
    assert abs(tr.iterates[-1][0]) <= 1e-10


def test_ogda_zero_data_is_fixed_point():
    tr = run_single_loop(scalar_problem(), np.zeros(1), np.zeros(1),
                         SingleLoopConfig("ogda", T=10, record_iterates=True))
    assert all(x[0] == 0.0 for x in tr.iterates)


@pytest.mark.parametrize("method", METHODS)
def test_chain_supports_and_distance_floor(method):
    N, d = 2, 10
    inst = sc_chain(N, d, 1.0, 1 / 16, 1.0)
    xs = inst.closed_form_optimum()
    kmax = 5 * (N + 1)
    tr = run_single_loop(inst.problem(), np.zeros(inst.n), np.zeros(inst.A.m),
                         SingleLoopConfig(method, T=kmax, record_iterates=True), x_star=xs)
    assert all(tr.column("support_ok") == 1)
    d0 = float(xs @ xs)
    for k, x in enumerate(tr.iterates, 1):
        assert float((x - xs) @ (x - xs)) >= q2k_floor(inst.q, chain_depth(k, N), d0)


@pytest.mark.parametrize("method", METHODS)
def test_default_steps_converge_on_strongly_convex_quadratic(method):
    rng = np.random.default_rng(0)
    M = rng.standard_normal((3, 6))
    b = rng.standard_normal(3)
    p = CompositeProblem(quadratic(np.eye(6)), indicator_zero(), dense_map(M), b)
    xs = M.T @ np.linalg.solve(M @ M.T, b)
    tr = run_single_loop(p, np.zeros(6), np.zeros(3), SingleLoopConfig(method, T=3000), x_star=xs)
    assert tr.column("dist_x")[-1] <= 1e-6


def test_default_chambolle_pock_steps():
    cfg = SingleLoopConfig("chambolle_pock").resolved(2.0, 3.0)
    assert cfg.eta1 * cfg.eta2 * 9.0 == pytest.approx(0.5)


def test_one_oracle_call_each_per_iteration():
    tr = run_single_loop(scalar_problem(), np.ones(1), np.zeros(1), SingleLoopConfig("ogda", T=5))
    g = tr.column("grad_f")
    assert np.all(np.diff(g) == 1)


def test_divergence_detected():
    cfg = SingleLoopConfig("chambolle_pock", eta1=5.0, eta2=5.0, T=500)
    with pytest.raises(DivergenceError) as err:
        run_single_loop(scalar_problem(), np.ones(1), np.zeros(1), cfg)
    assert err.value.k > 0


def test_rejects_unknown_method_and_regularizer():
    with pytest.raises(ParameterError):
        SingleLoopConfig("admm")
    with pytest.raises(ParameterError):
        SingleLoopConfig("ogda", eta1=-1.0)
    p = CompositeProblem(quadratic(np.eye(2)), euclidean_norm(), identity_map(2), np.zeros(2))
    with pytest.raises(UnsupportedError):
        run_single_loop(p, np.zeros(2), np.zeros(2), SingleLoopConfig("ogda"))
