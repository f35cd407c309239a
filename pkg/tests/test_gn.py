import math

import numpy as np
import pytest

from nqlap.errors import InvalidRegime
from nqlap.gn import (
    GnOptions,
    critical_mass_c2,
    minimize_weinstein,
    omega_el_residual,
    sharp_constant_exponent,
)
from nqlap.params import validate
from nqlap.radial import RadialField, components, weinstein


def test_k_is_reciprocal_of_quotient_min(gn_a):
    assert gn_a.K == pytest.approx(1.0 / gn_a.J_min, rel=1e-14)


def test_restart_scale_invariance(params_a, grid_a, gn_a):
    scaled = RadialField(grid_a, 3.0 * gn_a.Q.values)
    res = minimize_weinstein(params_a, grid_a, GnOptions(n_restarts=1, seed=1),
                             init=scaled)
    assert abs(res.J_min - gn_a.J_min) <= 1e-8 * gn_a.J_min


def test_mass_identity_and_virial_split(gn_a, gn_b):
    for res in (gn_a, gn_b):
        assert res.identity_residuals["mass_identity"] <= 1e-3
        assert res.identity_residuals["virial_split"] <= 1e-3


def test_quotient_at_q_equals_jmin(params_a, gn_a):
    # J is invariant under the output gauge, so J(Q) = J_min up to resampling.
    assert weinstein(gn_a.Q, params_a) == pytest.approx(gn_a.J_min, rel=1e-5)


def test_el_residual_small(gn_a, gn_b):
    assert gn_a.el_residual <= 1e-4
    assert gn_b.el_residual <= 1e-4


def test_sharp_constant_mass_relation(params_a, gn_a):
    # K = p / |Q|_2^theta with theta = 2 sigma/q + p - sigma - 2.
    theta = sharp_constant_exponent(params_a)
    m2 = components(gn_a.Q, params_a).m2
    assert gn_a.K == pytest.approx(params_a.p / m2 ** (theta / 2.0), rel=1e-5)


def test_sharp_constant_exponent_reduces_at_q2():
    pr = validate(3, 2.0, 3.0, 1.0)
    assert sharp_constant_exponent(pr) == pytest.approx(pr.p - 2.0, rel=1e-14)


def test_shooting_bracket_and_dichotomy(shoot_a):
    lo, hi = shoot_a.bracket
    assert hi - lo <= 1e-12 * hi
    assert shoot_a.field.values.min() >= 0.0
    # the innermost node sits at r_0 > 0, slightly below the shooting height
    assert shoot_a.field.values[0] <= shoot_a.s_star
    assert shoot_a.field.values[0] == pytest.approx(shoot_a.s_star, rel=1e-3)


def test_shooting_agrees_with_descent(params_a, gn_a, shoot_a):
    Ks = 1.0 / weinstein(shoot_a.field, params_a)
    assert abs(Ks - gn_a.K) <= 1e-2 * gn_a.K
    num = np.abs(shoot_a.field.values - gn_a.Q.values).max()
    assert num <= 1e-2 * np.abs(shoot_a.field.values).max()


def test_shooting_profile_solves_equation(params_a, shoot_a):
    assert omega_el_residual(shoot_a.field, params_a) <= 1e-4


def test_descent_profile_solves_equation(params_a, gn_a):
    assert omega_el_residual(gn_a.Q, params_a) <= 1e-3


def test_gn_inequality_dominates_random_fields(params_a, grid_a, gn_a):
    from nqlap.checks import check_gn

    chk = check_gn(gn_a.K, params_a, grid_a, n_samples=100, seed=3)
    assert chk.passed


def test_critical_mass_forms_agree(params_crit, grid_a, gn_crit):
    res = critical_mass_c2(params_crit, grid_a, gn=gn_crit)
    assert res.c2_star > 0.0
    assert res.relative_gap <= 1e-6


def test_critical_mass_regime_gate(params_a, grid_a):
    with pytest.raises(InvalidRegime):
        critical_mass_c2(params_a, grid_a)


def test_critical_mass_closed_form_arithmetic():
    # Hypothetical inputs |Q|_2^2 = 4, q = 3, p = 5.5 forced through the
    # mass-form expression q^(2/(q-p)) (m2)^((p-2)/(p-q)).
    q, p, m2 = 3.0, 5.5, 4.0
    val = q ** (2.0 / (q - p)) * m2 ** ((p - 2.0) / (p - q))
    assert val == pytest.approx(3.0 ** (-0.8) * 4.0**1.4, rel=1e-12)
    assert val == pytest.approx(2.891925, rel=1e-6)


def test_critical_mass_forms_identity_under_hypothesis():
    # For any positive pair (K, m2) tied by K = p / m2^((p-2)/2), the
    # constant-form and mass-form expressions coincide as pure algebra.
    rng = np.random.default_rng(0)
    q, p = 3.0, 5.5
    for _ in range(20):
        m2 = float(rng.uniform(0.1, 50.0))
        K = p / m2 ** ((p - 2.0) / 2.0)
        form1 = (p / (q * K)) ** (2.0 / (p - q))
        form2 = q ** (2.0 / (q - p)) * m2 ** ((p - 2.0) / (p - q))
        assert form1 == pytest.approx(form2, rel=1e-12)


def test_restart_spread_recorded(gn_a):
    assert len(gn_a.restart_values) >= 1
    assert gn_a.meta["restart_spread"] >= 0.0
    assert min(gn_a.restart_values) == pytest.approx(gn_a.J_min, rel=1e-12)
