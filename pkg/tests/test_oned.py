import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from yieldflow.errors import DomainError
from yieldflow.oned import (
    dirichlet_1d,
    energy_1d,
    epsilon_min,
    minimal_energy,
    multiplier_cubic,
    profile_w,
    solve_lambda_A,
    solve_oned,
    subgradient_q,
    volume_1d,
)


def cubic_root_oracle(A, m):
    """Largest real root of the multiplier cubic via numpy's companion-matrix solver."""
    roots = np.roots([2.0, -3.0 * (A + m), 0.0, A**3])
    real = roots[np.abs(roots.imag) < 1e-9].real
    return float(np.max(real))


# values below come from cubic_root_oracle and the closed-form profile, evaluated once
LAMBDA_HALF_HALF = 1.4711209254846835
A_HALF_HALF = 0.5 / LAMBDA_HALF_HALF


def test_zero_mass_root_is_A():
    assert solve_lambda_A(1.0, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_half_half_multiplier():
    lam = solve_lambda_A(0.5, 0.5)
    assert lam == pytest.approx(1.4711, abs=1e-4)
    assert lam == pytest.approx(cubic_root_oracle(0.5, 0.5), rel=1e-12)
    assert lam == pytest.approx(LAMBDA_HALF_HALF, rel=1e-12)


def test_two_two_multiplier():
    lam = solve_lambda_A(2.0, 2.0)
    assert lam == pytest.approx(cubic_root_oracle(2.0, 2.0), rel=1e-12)
    assert 2 * lam**3 - 12 * lam**2 + 8 == pytest.approx(0.0, abs=1e-9)
    assert lam == pytest.approx(5.88448, abs=1e-5)


def test_profile_examples():
    sol = solve_oned(0.5, 0.5)
    assert sol.a == pytest.approx(0.3399, abs=1e-4)
    assert profile_w(sol, 0.0) == pytest.approx(0.5 * (A_HALF_HALF - 1) ** 2 / (2 * A_HALF_HALF), rel=1e-12)
    assert profile_w(sol, 0.0) == pytest.approx(0.3206, abs=1e-4)
    assert profile_w(sol, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert profile_w(sol, -1.0) == pytest.approx(0.0, abs=1e-15)


def test_zero_mass_profile_vanishes():
    sol = solve_oned(0.7, 0.0)
    assert sol.a == pytest.approx(1.0)
    y = np.linspace(-1, 1, 11)
    assert np.allclose(profile_w(sol, y), 0.0, atol=1e-15)
    assert np.allclose(subgradient_q(sol, y), -y)


def test_subgradient_examples():
    sol = solve_oned(0.5, 0.5)
    assert subgradient_q(sol, 0.0) == 0.0
    assert subgradient_q(sol, 0.17) == pytest.approx(-0.17 / sol.a, rel=1e-12)
    assert subgradient_q(sol, 0.17) == pytest.approx(-0.5001, abs=2e-4)
    assert subgradient_q(sol, 0.99) == -1.0


def test_minimal_energy_examples():
    assert minimal_energy(solve_oned(1.0, 0.0)) == 0.0
    assert minimal_energy(solve_oned(0.5, 0.5)) == pytest.approx(0.7356, abs=1e-4)
    assert minimal_energy(solve_oned(2.0, 2.0)) == pytest.approx(2 * cubic_root_oracle(2.0, 2.0), rel=1e-12)
    assert minimal_energy(solve_oned(2.0, 2.0)) == pytest.approx(11.769, abs=1e-3)


def test_energy_quadrature_matches_closed_form_minimum():
    sol = solve_oned(0.5, 0.5)
    y = np.linspace(-1, 1, 2048)
    w = profile_w(sol, y)
    w[[0, -1]] = 0.0
    assert energy_1d(w, sol.A) == pytest.approx(epsilon_min(sol), rel=1e-3)
    assert epsilon_min(sol) == pytest.approx(0.52805, abs=1e-5)


def test_pairing_identity():
    # m * lam_A is the minimum plus half the Dirichlet integral, not the minimum itself
    for A, m in [(0.5, 0.5), (2.0, 2.0), (1.3, 0.2), (0.1, 3.0)]:
        sol = solve_oned(A, m)
        assert epsilon_min(sol) + 0.5 * dirichlet_1d(sol) == pytest.approx(minimal_energy(sol), rel=1e-12)
        y = np.linspace(-1, 1, 4097)
        w = profile_w(sol, y)
        w[[0, -1]] = 0.0
        d = np.diff(w) / (y[1] - y[0])
        pairing = np.sum(d * d + A * np.abs(d)) * (y[1] - y[0])
        assert pairing == pytest.approx(minimal_energy(sol), rel=1e-3)


def test_energy_zero_samples():
    assert energy_1d(np.zeros(5), 3.0) == 0.0


def test_energy_rejects_bad_input():
    with pytest.raises(DomainError):
        energy_1d([0.0, 0.0], 1.0)
    with pytest.raises(DomainError):
        energy_1d([0.1, 0.2, 0.0], 1.0)


def test_domain_errors():
    with pytest.raises(DomainError):
        solve_lambda_A(0.0, 1.0)
    with pytest.raises(DomainError):
        solve_lambda_A(1.0, -0.1)
    sol = solve_oned(1.0, 1.0)
    with pytest.raises(DomainError):
        profile_w(sol, 1.5)
    with pytest.raises(DomainError):
        subgradient_q(sol, -1.01)


def test_volume_identity():
    for A, m in [(0.5, 0.5), (2.0, 2.0), (1.3, 0.2)]:
        sol = solve_oned(A, m)
        y = np.linspace(-1, 1, 4096)
        w = profile_w(sol, y)
        assert volume_1d(w) == pytest.approx(m, rel=1e-6)
        a = sol.a
        assert A * (1 - a) ** 2 * (2 + a) / (3 * a) == pytest.approx(m, rel=1e-10)


def test_volume_preserving_perturbations_raise_energy():
    sol = solve_oned(0.8, 0.6)
    y = np.linspace(-1, 1, 1025)
    w = profile_w(sol, y)
    w[[0, -1]] = 0.0
    base = energy_1d(w, sol.A)
    rng = np.random.default_rng(7)
    for _ in range(25):
        # whole periods of sin(k pi (y + 1)) vanish at the walls and carry no volume
        coef = rng.normal(size=5)
        d = sum(c * np.sin(k * np.pi * (y + 1)) for k, c in enumerate(coef, start=1))
        d *= rng.uniform(1e-3, 0.05) / np.max(np.abs(d))
        d[[0, -1]] = 0.0
        assert abs(volume_1d(d)) < 1e-12
        assert energy_1d(w + d, sol.A) > base


def test_subgradient_consistency_on_grid():
    sol = solve_oned(0.5, 0.5)
    y = np.linspace(-1, 1, 2001)
    w = profile_w(sol, y)
    q = subgradient_q(sol, y)
    # analytic derivative of the closed form
    dw = np.where(np.abs(y) <= sol.a, 0.0, sol.A * (-y / sol.a + np.sign(y)))
    assert np.all(np.abs(q) <= 1.0)
    assert np.allclose(q * dw, np.abs(dw), atol=1e-13)
    assert np.all(np.diff(w[y >= 0]) <= 1e-15)


def test_lambda_increasing_in_m():
    ms = np.linspace(0.0, 4.0, 41)
    lams = [solve_lambda_A(1.2, m) for m in ms]
    assert np.all(np.diff(lams) > 0)


@settings(max_examples=200, deadline=None)
@given(A=st.floats(1e-3, 50.0), m=st.floats(0.0, 50.0))
def test_cubic_invariants(A, m):
    tol = 1e-12
    lam = solve_lambda_A(A, m, tol)
    assert lam >= A + m
    assert abs(multiplier_cubic(lam, A, m)) <= tol * max(1.0, (A + m) ** 3) * 1.0001 or lam == A + m
    a = A / lam
    assert 0.0 < a <= 1.0
    assert (lam - A) ** 2 * (2 * lam + A) / (3 * lam**2) == pytest.approx(m, rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(A=st.floats(0.05, 5.0), m=st.floats(0.0, 5.0), y=st.floats(-1.0, 1.0))
def test_profile_properties(A, m, y):
    sol = solve_oned(A, m)
    w = profile_w(sol, y)
    assert w >= -1e-12
    assert w <= sol.plateau_height + 1e-12
    assert profile_w(sol, -y) == w
    assert abs(subgradient_q(sol, y)) <= 1.0
