import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swarmctl.model import (
    CollisionError,
    ForceBounds,
    GUARD_RADIUS,
    ModelParams,
    MorsePotential,
    PowerLawPotential,
    QuasiMorsePotential,
    SingularPotentialError,
    SwarmState,
    force_bounds,
    hessian_w,
    interaction_forces,
    pair_gradient,
    perp,
    potential_deriv,
    potential_from_config,
    potential_second_deriv,
    potential_value,
    rotation,
    threshold_m_alpha_beta,
    total_energy,
)

PL41 = PowerLawPotential(4, 1)
MORSE = MorsePotential(C_A=1.0, ell_A=1.0, C_R=2.0, ell_R=0.5)
QM = QuasiMorsePotential(C=0.6, l=0.5, p=1.5)
ALL_POTS = [PL41, MORSE, QM]


def rng(seed=0):
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


# ---------------------------------------------------------------------------
# potential values / derivatives
# ---------------------------------------------------------------------------

def test_power_law_value_at_one():
    assert potential_value(PL41, 1.0) == pytest.approx(-0.75, abs=0)


def test_quasi_morse_value_at_zero():
    # V(0) = -1, so U(0) = -1 + C
    assert potential_value(QM, 0.0) == pytest.approx(-1 + 0.6, abs=1e-15)


def test_morse_value_against_mpmath():
    import mpmath

    mpmath.mp.dps = 50
    expected = float(-mpmath.e ** (-1) + 2 * mpmath.e ** (-2))
    assert potential_value(MORSE, 1.0) == pytest.approx(expected, abs=1e-15)


def test_power_law_deriv_values():
    assert potential_deriv(PL41, 1.0) == pytest.approx(0.0, abs=0)
    assert potential_deriv(PL41, 2.0) == pytest.approx(7.0, abs=0)


def test_deriv_matches_finite_difference():
    h = 1e-6
    for pot in ALL_POTS:
        for r in (0.3, 0.9, 1.7, 3.2):
            fd = (potential_value(pot, r + h) - potential_value(pot, r - h)) / (2 * h)
            assert potential_deriv(pot, r) == pytest.approx(fd, abs=1e-6)


def test_bounded_families_have_vanishing_tail():
    # power laws are excluded: their derivative grows without bound
    for pot, cutoff in ((MORSE, 30.0), (QM, 30.0)):
        rs = np.linspace(cutoff, cutoff * 10, 50)
        assert np.max(np.abs(pot.deriv(rs))) < 1e-8


def test_second_deriv_values():
    assert potential_second_deriv(PL41, 1.0) == pytest.approx(3.0, abs=0)
    pl21 = PowerLawPotential(2, 1)
    for r in (0.5, 1.0, 2.5):
        assert potential_second_deriv(pl21, r) == pytest.approx(1.0, abs=0)


def test_second_deriv_matches_finite_difference():
    h = 1e-5
    for pot in ALL_POTS:
        for r in (0.4, 1.0, 2.0):
            fd = (potential_deriv(pot, r + h) - potential_deriv(pot, r - h)) / (2 * h)
            assert potential_second_deriv(pot, r) == pytest.approx(fd, rel=1e-5, abs=1e-5)


def test_domain_errors():
    with pytest.raises(ValueError):
        potential_value(PL41, -0.5)
    singular = PowerLawPotential(2, 0.5)
    with pytest.raises(SingularPotentialError):
        potential_deriv(singular, 0.0)
    with pytest.raises(SingularPotentialError):
        potential_second_deriv(PL41, 0.0)


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        PowerLawPotential(1.0, 2.0)
    with pytest.raises(ValueError):
        MorsePotential(0.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        QuasiMorsePotential(0.6, -0.5, 1.5)


def test_config_round_trip():
    for pot in ALL_POTS:
        cfg = pot.to_config()
        again = potential_from_config(cfg)
        assert again == pot
    with pytest.raises(ValueError):
        potential_from_config({"family": "power_law", "a": 4.0, "b": 1.0, "zz": 1})
    with pytest.raises(ValueError):
        potential_from_config({"family": "nope"})


# ---------------------------------------------------------------------------
# pair gradient / forces / Hessian
# ---------------------------------------------------------------------------

def test_pair_gradient_values():
    np.testing.assert_allclose(pair_gradient(PL41, np.array([1.0, 0.0])),
                               [0.0, 0.0], atol=0)
    np.testing.assert_allclose(pair_gradient(PL41, np.array([2.0, 0.0])),
                               [7.0, 0.0], atol=1e-14)


@given(st.floats(0.2, 5.0), st.floats(0.0, 2 * math.pi))
@settings(max_examples=60, deadline=None)
def test_pair_gradient_odd(r, ang):
    d = np.array([r * math.cos(ang), r * math.sin(ang)])
    for pot in ALL_POTS:
        np.testing.assert_allclose(pair_gradient(pot, -d), -pair_gradient(pot, d),
                                   atol=1e-14)


@given(st.floats(0.2, 5.0), st.floats(0.0, 2 * math.pi), st.floats(0.0, 2 * math.pi))
@settings(max_examples=60, deadline=None)
def test_pair_gradient_rotation_equivariant(r, ang, theta):
    d = np.array([r * math.cos(ang), r * math.sin(ang)])
    rot = rotation(theta)
    for pot in ALL_POTS:
        lhs = pair_gradient(pot, rot @ d)
        rhs = rot @ pair_gradient(pot, d)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_pair_gradient_matches_finite_difference():
    g = rng(3)
    h = 1e-6
    for pot in ALL_POTS:
        for _ in range(100):
            d = g.uniform(-3, 3, size=2)
            if np.linalg.norm(d) < 0.2:
                continue
            grad = pair_gradient(pot, d)
            for k in range(2):
                dp = d.copy(); dp[k] += h
                dm = d.copy(); dm[k] -= h
                fd = (potential_value(pot, np.linalg.norm(dp))
                      - potential_value(pot, np.linalg.norm(dm))) / (2 * h)
                assert grad[k] == pytest.approx(fd, abs=1e-5)


def test_pair_gradient_collision_guard():
    with pytest.raises(CollisionError):
        pair_gradient(PL41, np.array([1e-12, 0.0]))


def test_hessian_symmetric_and_special_case():
    g = rng(5)
    for _ in range(20):
        d = g.uniform(-2, 2, size=2)
        if np.linalg.norm(d) < 0.3:
            continue
        H = hessian_w(QM, d)
        np.testing.assert_allclose(H, H.T, atol=1e-15)
    pl21 = PowerLawPotential(2, 1)
    for r in (0.5, 1.5, 3.0):
        H = hessian_w(pl21, np.array([r, 0.0]))
        np.testing.assert_allclose(H, np.diag([1.0, 1.0 - 1.0 / r]), atol=1e-12)


def test_hessian_matches_finite_difference():
    g = rng(11)
    h = 1e-4
    for pot in ALL_POTS:
        for _ in range(25):
            d = g.uniform(-3, 3, size=2)
            if np.linalg.norm(d) < 0.4:
                continue
            H = hessian_w(pot, d)
            for i in range(2):
                for j in range(2):
                    dpp = d.copy(); dpp[i] += h; dpp[j] += h
                    dpm = d.copy(); dpm[i] += h; dpm[j] -= h
                    dmp = d.copy(); dmp[i] -= h; dmp[j] += h
                    dmm = d.copy(); dmm[i] -= h; dmm[j] -= h
                    fd = (potential_value(pot, np.linalg.norm(dpp))
                          - potential_value(pot, np.linalg.norm(dpm))
                          - potential_value(pot, np.linalg.norm(dmp))
                          + potential_value(pot, np.linalg.norm(dmm))) / (4 * h * h)
                    assert H[i, j] == pytest.approx(fd, abs=1e-4)


def test_forces_at_pair_equilibrium():
    x = np.array([[0.0, 0.0], [1.0, 0.0]])
    F = interaction_forces(PL41, x)
    np.testing.assert_allclose(F, 0.0, atol=1e-15)


def test_forces_sum_to_zero():
    g = rng(17)
    for n in (3, 10, 50):
        x = g.uniform(-4, 4, size=(n, 2))
        F = interaction_forces(QM, x)
        assert np.max(np.abs(F.sum(axis=0))) < n * n * 1e-13


def test_forces_translation_invariance():
    g = rng(23)
    x = g.uniform(-2, 2, size=(6, 2))
    F0 = interaction_forces(QM, x)
    F1 = interaction_forces(QM, x + np.array([37.25, -11.5]))
    # identical up to the rounding of the shifted coordinates
    np.testing.assert_allclose(F1, F0, atol=1e-12)


def test_forces_match_energy_gradient():
    g = rng(31)
    n = 3
    x = g.uniform(-1.5, 1.5, size=(n, 2))
    h = 1e-6

    def pair_energy(xx):
        e = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    e += float(potential_value(QM, np.linalg.norm(xx[i] - xx[j])))
        return e / (2 * n)

    F = interaction_forces(QM, x)
    for i in range(n):
        for k in range(2):
            xp = x.copy(); xp[i, k] += h
            xm = x.copy(); xm[i, k] -= h
            fd = (pair_energy(xp) - pair_energy(xm)) / (2 * h)
            assert F[i, k] == pytest.approx(fd, abs=1e-6)


def test_forces_collision_identifies_pair():
    x = np.array([[0.0, 0.0], [1e-11, 0.0], [1.0, 1.0]])
    with pytest.raises(CollisionError) as exc:
        interaction_forces(PL41, x)
    assert exc.value.pair == (0, 1)


# ---------------------------------------------------------------------------
# energy and thresholds
# ---------------------------------------------------------------------------

def test_total_energy_pair_equilibrium_at_rest():
    state = SwarmState(0.0, np.array([[0.0, 0.0], [1.0, 0.0]]), np.zeros((2, 2)))
    # (1/(2N)) * 2 * U(1) with U(1) = -3/4
    assert total_energy(state, PL41) == pytest.approx(-3.0 / 8.0, abs=1e-15)


def test_total_energy_kinetic_only():
    g = rng(41)
    v = g.normal(size=(5, 2))
    v = v / np.linalg.norm(v, axis=1, keepdims=True) * 1.3
    state = SwarmState(0.0, g.uniform(-3, 3, size=(5, 2)), v)
    far = MorsePotential(1e-300, 1.0, 2e-300, 0.5)  # negligible interaction
    assert total_energy(state, far) == pytest.approx(5 * 1.3**2 / 2, rel=1e-12)


def test_threshold_zero_alpha():
    assert threshold_m_alpha_beta(ModelParams(0.0, 1.5, 1.0, 2)) == 0.0


def test_threshold_matches_grid_maximum():
    for alpha, beta in ((2.0, 1.5), (3.0, 4.0), (10.0, 3.0)):
        params = ModelParams(alpha, beta, 1.0, 2)
        s = np.linspace(0, 5 * math.sqrt(alpha / beta), 2_000_001)
        grid_max = float(np.max(alpha * s - beta * s**3))
        assert threshold_m_alpha_beta(params) == pytest.approx(grid_max, abs=1e-8)


def test_threshold_attained_at_stationary_point():
    alpha, beta = 3.0, 4.0
    s_star = math.sqrt(alpha / (3 * beta))
    assert s_star == pytest.approx(0.5, abs=0)
    val = alpha * s_star - beta * s_star**3
    assert threshold_m_alpha_beta(ModelParams(alpha, beta, 1.0, 2)) == \
        pytest.approx(val, rel=1e-14)


# ---------------------------------------------------------------------------
# force bounds
# ---------------------------------------------------------------------------

def test_force_bounds_power_law_unbounded():
    fb = force_bounds(PL41, 1.0, 4)
    assert math.isinf(fb.m_f) and math.isinf(fb.tilde_m_f) and math.isinf(fb.tilde_m_n)


def test_force_bounds_morse_matches_dense_grid():
    fb = force_bounds(MORSE, 1.0, 4)
    rs = np.linspace(0.0, 60.0, 2_000_000)  # |U'| peaks at the r = 0 boundary
    dense = np.abs(MORSE.deriv(rs))
    assert math.isfinite(fb.m_f)
    assert fb.m_f == pytest.approx(float(np.max(dense)), rel=1e-6)
    cutoff = 2 * math.sin(math.pi / 4) * 1.0
    far = rs[rs > cutoff]
    assert fb.tilde_m_n == pytest.approx(float(np.max(np.abs(MORSE.deriv(far)))),
                                         rel=1e-6)
    pos = float(np.max(MORSE.deriv(rs)))
    assert fb.tilde_m_f == pytest.approx(max(pos, 0.0), rel=1e-6)


def test_force_bounds_quasi_morse_finite():
    fb = force_bounds(QM, 1.0, 8)
    rs = np.geomspace(1e-6, 100.0, 1_000_000)
    dense = float(np.max(np.abs(QM.deriv(rs))))
    assert fb.m_f == pytest.approx(dense, rel=1e-5)


# ---------------------------------------------------------------------------
# misc types
# ---------------------------------------------------------------------------

def test_perp_rotates_quarter_turn():
    np.testing.assert_allclose(perp(np.array([1.0, 0.0])), [0.0, 1.0], atol=0)
    np.testing.assert_allclose(perp(np.array([[0.0, 2.0], [3.0, -1.0]])),
                               [[-2.0, 0.0], [1.0, 3.0]], atol=0)


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(-1.0, 1.0, 1.0, 2)
    with pytest.raises(ValueError):
        ModelParams(1.0, 0.0, 1.0, 2)
    with pytest.raises(ValueError):
        ModelParams(1.0, 1.0, 0.0, 2)
    with pytest.raises(ValueError):
        ModelParams(1.0, 1.0, 1.0, 1)
    assert ModelParams(2.0, 1.5, 1.0, 2).cruise_speed == \
        pytest.approx(math.sqrt(2 / 1.5), rel=1e-15)


def test_swarm_state_shape_checks():
    with pytest.raises(ValueError):
        SwarmState(0.0, np.zeros((3, 2)), np.zeros((2, 2)))
    st_ok = SwarmState(0.0, np.zeros((3, 2)), np.zeros((3, 2)))
    assert st_ok.n == 3 and st_ok.is_finite()
