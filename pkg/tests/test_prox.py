import numpy as np
import pytest

from composolve import (ParameterError, SurrogateSpec, UnsupportedError, custom_prox, euclidean_norm,
                        h_rho_value, indicator_nonpositive, indicator_zero, l1_norm,
                        prox_conjugate_scaled)


def test_conjugate_prox_of_zero_indicator_is_identity():
    np.testing.assert_array_equal(prox_conjugate_scaled(indicator_zero(), 3.0, np.array([1.0, -2.0])),
                                  [1.0, -2.0])


def test_conjugate_prox_of_norm_projects_onto_unit_ball():
    np.testing.assert_allclose(prox_conjugate_scaled(euclidean_norm(), 1.0, np.array([3.0, 4.0])),
                               [0.6, 0.8], atol=1e-15)


def test_conjugate_prox_of_l1_clips_to_unit_box():
    # prox of 2*l1 at 2w = [1.8, -0.4] is zero, so the result is w itself
    w = np.array([0.9, -0.2])
    out = prox_conjugate_scaled(l1_norm(), 2.0, w)
    np.testing.assert_allclose(out, [0.9, -0.2], atol=1e-15)
    np.testing.assert_allclose(out, np.clip(w, -1, 1))


def test_conjugate_prox_of_l1_clips_large_entries():
    w = np.array([2.5, -0.3, -7.0])
    np.testing.assert_allclose(prox_conjugate_scaled(l1_norm(), 0.5, w), np.clip(w, -1, 1))


def test_moreau_identity():
    rng = np.random.default_rng(0)
    for h in (indicator_zero(), indicator_nonpositive(), euclidean_norm(1.5), l1_norm(0.4)):
        for _ in range(20):
            w, ell = rng.standard_normal(7) * 2, rng.uniform(0.05, 10)
            rec = h.prox(ell, ell * w) / ell + prox_conjugate_scaled(h, ell, w)
            assert np.max(np.abs(rec - w)) <= 1e-12


def test_conjugate_prox_rejects_nonpositive_ell():
    with pytest.raises(ParameterError):
        prox_conjugate_scaled(indicator_zero(), 0.0, np.zeros(2))


def test_surrogate_values_for_builtin_kinds():
    assert h_rho_value(indicator_zero(), SurrogateSpec(2.0), np.array([3.0, 4.0])) == pytest.approx(10.0)
    assert h_rho_value(indicator_nonpositive(), SurrogateSpec(1.0), np.array([2.0, -3.0])) == pytest.approx(2.0)
    assert h_rho_value(euclidean_norm(), SurrogateSpec(1.0), np.array([0.3, 0.4])) == pytest.approx(0.5)
    # radius below the norm weight caps the slope
    assert h_rho_value(euclidean_norm(2.0), SurrogateSpec(0.5), np.array([3.0, 4.0])) == pytest.approx(2.5)


def test_surrogate_of_l1_needs_large_radius():
    z = np.array([1.0, -2.0])
    assert h_rho_value(l1_norm(), SurrogateSpec(2.0), z) == pytest.approx(3.0)
    with pytest.raises(UnsupportedError):
        h_rho_value(l1_norm(), SurrogateSpec(1.0), z)


def test_surrogate_of_custom_kind_is_unsupported():
    h = custom_prox(lambda z: 0.0, lambda t, z: z)
    with pytest.raises(UnsupportedError) as err:
        h_rho_value(h, SurrogateSpec(1.0), np.zeros(2))
    assert err.value.kind == "custom"


def test_surrogate_radius_must_be_positive():
    with pytest.raises(ParameterError):
        SurrogateSpec(0.0)


def test_surrogate_is_lipschitz_lower_bound():
    rng = np.random.default_rng(5)
    for h, rho in ((indicator_zero(), 2.0), (indicator_nonpositive(), 0.7), (euclidean_norm(), 3.0)):
        spec = SurrogateSpec(rho)
        for _ in range(30):
            z, zp = rng.standard_normal(3), rng.standard_normal(3)
            assert abs(h_rho_value(h, spec, z) - h_rho_value(h, spec, zp)) <= rho * np.linalg.norm(z - zp) + 1e-12
            assert h_rho_value(h, spec, z) <= h.value(z) + 1e-12
