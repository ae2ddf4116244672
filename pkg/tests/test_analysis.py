import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swarmctl.model import ModelParams, MorsePotential, PowerLawPotential, SwarmState, rotation
from swarmctl.analysis import (
    NoBracketError,
    ReducedMillState,
    char_coeffs,
    cubic_roots,
    distance_to_flock_manifold,
    first_order_G,
    flock_ring_spec,
    integrate_reduced_mill,
    mill_diagnostics,
    mill_linearization_matrix,
    mill_radius_residual,
    mill_radius_roots,
    mill_radius_solve,
    mill_ring_spec,
    min_enclosing_circle,
    phi_of_r,
    phi_prime0_central,
    phi_prime0_power_law,
    reduced_mill_rhs,
    ring_positions,
    ring_state,
    routh_hurwitz_stable,
)

PL41 = PowerLawPotential(4, 1)
P10_3 = ModelParams(10.0, 3.0, 2.0, 8)


# ---------------------------------------------------------------------------
# rings
# ---------------------------------------------------------------------------

def test_ring_positions_square():
    spec = flock_ring_spec((0.0, 0.0), 1.0, 4)
    x = ring_positions(spec)
    expected = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)
    np.testing.assert_allclose(x, expected, atol=1e-15)


def test_ring_adjacent_chords_and_centroid():
    for n in (3, 5, 8):
        spec = flock_ring_spec((2.0, -1.5), 1.7, n, theta=0.3)
        x = ring_positions(spec)
        chord = 2 * 1.7 * math.sin(math.pi / n)
        for i in range(n):
            d = np.linalg.norm(x[i] - x[(i + 1) % n])
            assert d == pytest.approx(chord, rel=1e-13)
        np.testing.assert_allclose(x.mean(axis=0), [2.0, -1.5], atol=1e-14)


def test_mill_ring_state_speeds_and_tangency():
    spec = mill_ring_spec((1.0, 2.0), 1.3, P10_3, 8)
    state = ring_state(spec, P10_3, "mill")
    rel = state.x - np.array([1.0, 2.0])
    speeds = np.linalg.norm(state.v, axis=1)
    np.testing.assert_allclose(speeds, P10_3.cruise_speed, atol=1e-14)
    np.testing.assert_allclose(np.sum(rel * state.v, axis=1), 0.0, atol=1e-13)


def test_flock_ring_state_requires_cruise_speed():
    spec = flock_ring_spec((0, 0), 1.0, 4)
    with pytest.raises(ValueError):
        ring_state(spec, P10_3, "flock", vbar=(1.0, 0.0))


# ---------------------------------------------------------------------------
# mill radius equation
# ---------------------------------------------------------------------------

def test_residual_reduces_to_quartic_for_pair():
    params = ModelParams(10.0, 3.0, 2.0, 2)
    for R in (0.5, 0.9, 1.0, 1.5):
        res = mill_radius_residual(PL41, params, 2, R)
        assert 3 * R * res == pytest.approx(24 * R**4 - 3 * R - 20, rel=1e-12)
    assert mill_radius_residual(PL41, params, 2, 0.9) < 0
    assert mill_radius_residual(PL41, params, 2, 1.0) > 0


def test_pair_mill_radius_satisfies_quartic():
    params = ModelParams(10.0, 3.0, 2.0, 2)
    R = mill_radius_solve(PL41, params, 2, bracket=(0.9, 1.0))
    assert abs(24 * R**4 - 3 * R - 20) < 1e-9


def test_pair_flock_radius_is_half():
    params = ModelParams(10.0, 3.0, 2.0, 2)
    R = mill_radius_solve(PL41, params, 2, mill=False)
    assert R == pytest.approx(0.5, abs=1e-12)


def test_residual_continuous_on_grid():
    params = ModelParams(10.0, 3.0, 2.0, 8)
    rs = np.linspace(0.3, 3.0, 400)
    vals = [mill_radius_residual(PL41, params, 8, float(r)) for r in rs]
    diffs = np.abs(np.diff(vals))
    # Lipschitz-type bound from the sampled slope
    slope = np.max(diffs) / (rs[1] - rs[0])
    assert np.all(diffs <= slope * (rs[1] - rs[0]) + 1e-9)


def test_solver_bracket_independence():
    params = ModelParams(10.0, 3.0, 2.0, 8)
    r1 = mill_radius_solve(PL41, params, 8, bracket=(0.5, 2.0))
    r2 = mill_radius_solve(PL41, params, 8, bracket=(0.9, 1.5))
    r3 = mill_radius_solve(PL41, params, 8)
    assert abs(r1 - r2) < 1e-10 and abs(r1 - r3) < 1e-10


def test_solver_no_bracket_error():
    params = ModelParams(10.0, 3.0, 2.0, 8)
    with pytest.raises(NoBracketError):
        mill_radius_solve(PL41, params, 8, bracket=(2.0, 3.0))


def test_all_roots_reported_ascending():
    params = ModelParams(10.0, 3.0, 2.0, 8)
    roots = mill_radius_roots(PL41, params, 8)
    assert roots == sorted(roots)
    for r in roots:
        assert abs(mill_radius_residual(PL41, params, 8, r)) < 1e-9


# ---------------------------------------------------------------------------
# reduced system and linearization
# ---------------------------------------------------------------------------

def test_phi_consistency_at_solved_radius():
    R = mill_radius_solve(PL41, P10_3, 8)
    c = P10_3.cruise_speed
    omega = c / R
    assert phi_of_r(PL41, 8, R, 0.0) / c == pytest.approx(omega, rel=1e-10)
    assert phi_of_r(PL41, 8, R, 0.0) * R == pytest.approx(
        P10_3.alpha / P10_3.beta, rel=1e-10)


def test_phi_linear_in_potential():
    m1 = MorsePotential(1.0, 1.0, 2.0, 0.5)
    m2 = MorsePotential(2.0, 1.0, 4.0, 0.5)
    for r in (-0.2, 0.0, 0.4):
        assert phi_of_r(m2, 8, 1.0, r) == pytest.approx(
            2 * phi_of_r(m1, 8, 1.0, r), rel=1e-14)


def test_reduced_rhs_zero_at_equilibrium():
    R = mill_radius_solve(PL41, P10_3, 8)
    rhs = reduced_mill_rhs(ReducedMillState(0.0, 0.0, 0.0), PL41, P10_3, 8, R)
    # residual of the radius solve bounds the equilibrium defect
    assert np.max(np.abs(rhs)) < 1e-9


def test_reduced_w_equation_factorization():
    """At gamma = 0 the w-equation is -beta w (w + 2c)(w + c)."""
    R = mill_radius_solve(PL41, P10_3, 8)
    c = P10_3.cruise_speed
    beta = P10_3.beta
    for w in (-1.5, -0.4, 0.3, 1.1):
        got = reduced_mill_rhs(ReducedMillState(0.0, 0.0, w), PL41, P10_3, 8, R)[2]
        expect = -beta * w * (w + 2 * c) * (w + c)
        assert got == pytest.approx(expect, rel=1e-12, abs=1e-12)
    for root in (0.0, -c + 1e-15):
        got = reduced_mill_rhs(ReducedMillState(0.0, 0.0, root), PL41, P10_3, 8, R)[2]
        assert abs(got) < 1e-12


def test_linearization_matches_fd_jacobian():
    R = mill_radius_solve(PL41, P10_3, 8)
    A = mill_linearization_matrix(PL41, P10_3, 8, R)
    h = 1e-7
    J = np.zeros((3, 3))
    for j in range(3):
        sp = np.zeros(3); sp[j] = h
        sm = -sp
        fp = reduced_mill_rhs(ReducedMillState(*sp), PL41, P10_3, 8, R)
        fm = reduced_mill_rhs(ReducedMillState(*sm), PL41, P10_3, 8, R)
        J[:, j] = (fp - fm) / (2 * h)
    np.testing.assert_allclose(A, J, atol=1e-6)


def test_linearization_structure():
    R = mill_radius_solve(PL41, P10_3, 8)
    A = mill_linearization_matrix(PL41, P10_3, 8, R)
    assert np.trace(A) == pytest.approx(-2 * P10_3.alpha, abs=1e-12)
    assert A[0, 1] == pytest.approx(P10_3.cruise_speed, abs=0)
    assert A[0, 0] == A[0, 2] == A[2, 0] == A[1, 1] == 0.0


def test_char_cubic_matches_eigensolve():
    R = mill_radius_solve(PL41, P10_3, 8)
    A = mill_linearization_matrix(PL41, P10_3, 8, R)
    a2, a1, a0 = char_coeffs(A)
    assert a2 == pytest.approx(2 * P10_3.alpha, abs=1e-12)
    ours = cubic_roots(a2, a1, a0)
    lapack = np.linalg.eigvals(A)
    for z in ours:
        assert float(np.min(np.abs(lapack - z))) < 1e-8
    for z in lapack:
        assert float(np.min(np.abs(ours - z))) < 1e-8


def test_phi_prime_closed_form_power_law():
    for n, R in ((8, 0.9), (8, 1.2), (20, 1.1)):
        closed = phi_prime0_power_law(PL41, n, R)
        fd = phi_prime0_central(PL41, n, R)
        assert closed == pytest.approx(fd, rel=1e-8)


def test_routh_hurwitz_known_cubics():
    # (lambda + 1)^3 = lambda^3 + 3 lambda^2 + 3 lambda + 1
    res = routh_hurwitz_stable(3.0, 3.0, 1.0)
    assert res.stable and res.margins == (3.0, 1.0, 8.0)
    assert not routh_hurwitz_stable(3.0, 3.0, -1.0).stable


@given(st.floats(0.05, 4.0), st.floats(0.05, 4.0), st.floats(0.05, 4.0))
@settings(max_examples=60, deadline=None)
def test_routh_hurwitz_matches_root_signs(r1, r2, r3):
    # real-rooted stable cubic (lambda + r1)(lambda + r2)(lambda + r3)
    a2 = r1 + r2 + r3
    a1 = r1 * r2 + r1 * r3 + r2 * r3
    a0 = r1 * r2 * r3
    assert routh_hurwitz_stable(a2, a1, a0).stable
    # flipping one root's sign destabilizes
    b2 = -r1 + r2 + r3
    b1 = -r1 * r2 - r1 * r3 + r2 * r3
    b0 = -r1 * r2 * r3
    assert not routh_hurwitz_stable(b2, b1, b0).stable


def test_power_law_mill_stable():
    for n in (8, 20, 200):
        params = ModelParams(10.0, 3.0, 2.0, n)
        R = mill_radius_solve(PL41, params, n)
        A = mill_linearization_matrix(PL41, params, n, R)
        res = routh_hurwitz_stable(*char_coeffs(A))
        assert res.stable
        assert all(m > 0 for m in res.margins)
        # the sign condition driving stability
        omega = params.cruise_speed / R
        cond = omega / R + params.cruise_speed * phi_prime0_central(PL41, n, R)
        assert cond > 0


def test_reduced_perturbation_decays():
    R = mill_radius_solve(PL41, P10_3, 8)
    hist = integrate_reduced_mill(ReducedMillState(0.05, 0.05, 0.05),
                                  PL41, P10_3, 8, R, dt=1e-3, t_end=50.0)
    assert float(np.linalg.norm(hist[-1])) < 1e-3


# ---------------------------------------------------------------------------
# first-order linearization matrix G
# ---------------------------------------------------------------------------

def jacobi_eigenvalues(A, sweeps=100, tol=1e-13):
    """Independent symmetric eigensolver: cyclic Jacobi rotations."""
    A = A.copy()
    n = A.shape[0]
    for _ in range(sweeps):
        off = math.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-18:
                    continue
                tau = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1 + tau * tau))
                c = 1.0 / math.sqrt(1 + t * t)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
    return np.sort(np.diag(A))


def test_G_symmetric_and_block_row_sums():
    spec = flock_ring_spec((0, 0), mill_radius_solve(PL41, P10_3, 8, mill=False), 8)
    res = first_order_G(PL41, ring_positions(spec))
    G = res.G
    np.testing.assert_allclose(G, G.T, atol=1e-12)
    for i in range(8):
        row = sum(G[2 * i:2 * i + 2, 2 * j:2 * j + 2] for j in range(8))
        np.testing.assert_allclose(row, 0.0, atol=1e-10)


def test_G_spectrum_matches_jacobi_oracle():
    spec = flock_ring_spec((0, 0), mill_radius_solve(PL41, P10_3, 8, mill=False), 8)
    res = first_order_G(PL41, ring_positions(spec))
    oracle = jacobi_eigenvalues(res.G)
    np.testing.assert_allclose(np.sort(res.eigenvalues), oracle, atol=1e-9)


def test_G_rigid_zero_modes_generic_ring():
    # translations (x2) and the rotation generator are always in the kernel
    spec = flock_ring_spec((0, 0), mill_radius_solve(PL41, P10_3, 8, mill=False), 8)
    x = ring_positions(spec)
    res = first_order_G(PL41, x)
    assert res.zero_count >= 3
    rot_mode = np.stack([-x[:, 1], x[:, 0]], axis=1).reshape(-1)
    np.testing.assert_allclose(res.G @ rot_mode, 0.0, atol=1e-10)


# ---------------------------------------------------------------------------
# manifold distance and diagnostics
# ---------------------------------------------------------------------------

def _flock_state(params, xstar, theta, b, vangle):
    x = xstar @ rotation(theta).T + np.asarray(b)
    c = params.cruise_speed
    v = np.tile([c * math.cos(vangle), c * math.sin(vangle)], (len(xstar), 1))
    return SwarmState(0.0, x, v)


def test_manifold_distance_zero_on_manifold():
    params = ModelParams(2.0, 1.5, 1.0, 6)
    xstar = ring_positions(flock_ring_spec((0, 0), 1.2, 6))
    for theta, b, va in ((0.0, (0, 0), 0.0), (0.7, (3.0, -2.0), 1.1),
                         (2.5, (-5.0, 0.4), -0.6)):
        state = _flock_state(params, xstar, theta, b, va)
        assert distance_to_flock_manifold(state, xstar, params) < 1e-6


def test_manifold_distance_transform_invariant():
    params = ModelParams(2.0, 1.5, 1.0, 5)
    g = np.random.Generator(np.random.Philox(key=np.uint64(8)))
    xstar = g.uniform(-1, 1, size=(5, 2))
    state = _flock_state(params, xstar, 0.3, (1.0, 2.0), 0.2)
    state.x[2] += [0.05, -0.02]
    state.v[1] += [0.03, 0.01]
    d0 = distance_to_flock_manifold(state, xstar, params)
    for theta, b in ((1.2, (4.0, -3.0)), (-0.8, (0.0, 10.0))):
        moved = SwarmState(0.0, state.x @ rotation(theta).T + np.asarray(b),
                           state.v @ rotation(theta).T)
        d1 = distance_to_flock_manifold(moved, xstar, params)
        # grid resolution: 2 pi / 720 in theta
        assert abs(d1 - d0) < 2 * (2 * math.pi / 720)


def test_manifold_distance_against_brute_force():
    params = ModelParams(2.0, 1.5, 1.0, 4)
    xstar = ring_positions(flock_ring_spec((0, 0), 1.0, 4))
    state = _flock_state(params, xstar, 0.4, (0.5, -0.3), 0.0)
    state.x[0] += [0.08, 0.03]
    ours = distance_to_flock_manifold(state, xstar, params)

    c = params.cruise_speed
    vmean = state.v.mean(axis=0)
    vbar = c * vmean / np.linalg.norm(vmean)
    vel_term = float(np.max(np.linalg.norm(state.v - vbar, axis=1)))
    best = math.inf
    for theta in np.linspace(0, 2 * math.pi, 721):
        res = state.x - xstar @ rotation(theta).T
        center = res.mean(axis=0)
        for bx in np.linspace(-0.08, 0.08, 17):
            for by in np.linspace(-0.08, 0.08, 17):
                b = center + [bx, by]
                pos = float(np.max(np.linalg.norm(res - b, axis=1)))
                best = min(best, pos + vel_term)
    assert ours <= best + 1e-9          # ours minimizes b exactly per theta
    assert ours >= best - 2 * (2 * math.pi / 720)


def test_min_enclosing_circle_cases():
    pts = [(0, 0), (2, 0), (1, 1)]
    (cx, cy), r = min_enclosing_circle(pts)
    assert (cx, cy) == pytest.approx((1.0, 0.0), abs=1e-12)
    assert r == pytest.approx(1.0, abs=1e-12)
    pts = [(0, 0), (4, 0), (1, 0), (2, 0)]
    (cx, cy), r = min_enclosing_circle(pts)
    assert cx == pytest.approx(2.0, abs=1e-12) and r == pytest.approx(2.0, abs=1e-12)
    g = np.random.Generator(np.random.Philox(key=np.uint64(4)))
    pts = g.uniform(-3, 3, size=(40, 2))
    (cx, cy), r = min_enclosing_circle(pts)
    d = np.linalg.norm(pts - [cx, cy], axis=1)
    assert float(np.max(d)) <= r + 1e-9


def test_mill_diagnostics_exact_ring():
    spec = mill_ring_spec((0.5, -0.5), 1.1, P10_3, 10)
    state = ring_state(spec, P10_3, "mill")
    d = mill_diagnostics(state, P10_3)
    assert d.radius_dev == pytest.approx(0.0, abs=1e-12)
    assert d.gamma_mean == pytest.approx(0.0, abs=1e-6)
    assert d.speed_dev == pytest.approx(0.0, abs=1e-12)


def test_mill_diagnostics_rotated_velocities():
    spec = mill_ring_spec((0.0, 0.0), 1.1, P10_3, 10)
    state = ring_state(spec, P10_3, "mill")
    for g0 in (0.1, 0.3, 0.8):
        rotated = SwarmState(0.0, state.x, state.v @ rotation(g0).T)
        d = mill_diagnostics(rotated, P10_3)
        assert d.gamma_mean == pytest.approx(g0, abs=1e-12)


def test_mill_diagnostics_radius_target():
    spec = mill_ring_spec((0.0, 0.0), 1.4, P10_3, 10)
    state = ring_state(spec, P10_3, "mill")
    d_own = mill_diagnostics(state, P10_3)
    assert d_own.radius_dev == pytest.approx(0.0, abs=1e-12)
    d_tgt = mill_diagnostics(state, P10_3, R_target=1.0)
    assert d_tgt.radius_dev == pytest.approx(0.4, abs=1e-12)
