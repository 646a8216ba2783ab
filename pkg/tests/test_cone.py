import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from yieldflow.cone import ConeChart, laplacian_constants
from yieldflow.errors import DomainError, GeometryError
from yieldflow.profiles import make_params, phi, phi_second

LAMBDAS = [1.05, 1.2, 1.4, 2.0, 3.0, 8.0]


@pytest.fixture(scope="module")
def chart2():
    return ConeChart(make_params(2.0))


def interior_points(chart, n, seed, s_max=0.9, L_range=(0.2, 5.0)):
    """Points ``(L s, L phi(s))`` on rescaled profiles, away from the cone edge."""
    rng = np.random.default_rng(seed)
    L = rng.uniform(*L_range, n)
    s = rng.uniform(-s_max, s_max, n)
    return L * s, L * np.asarray(phi(chart.params, s)), L


def test_membership_examples(chart2):
    assert chart2.K == pytest.approx(-1.35796, abs=1e-5)
    assert (-1.0) * 2.0 / chart2.K == pytest.approx(1.4728, abs=1e-4)
    assert chart2.in_cone(0.1, -1.0)
    assert not chart2.in_cone(0.0, -1.0)
    assert not chart2.in_cone(0.9, -0.1)
    for lam in LAMBDAS:
        c = ConeChart(lam)
        assert not c.in_cone(0.0, -3.0)


def test_solve_L_examples(chart2):
    assert chart2.solve_L(0.0, chart2.params.phi_min) == pytest.approx(1.0, rel=1e-12)
    assert chart2.solve_L(1.5, 3 * phi(chart2.params, 0.5)) == pytest.approx(3.0, rel=1e-12)
    L = chart2.solve_L(0.3, -2.0)
    assert abs(chart2.forward(L, 0.3) + 2.0) <= 1e-10


def test_solve_L_errors(chart2):
    with pytest.raises(GeometryError):
        chart2.solve_L(0.0, 0.0)
    with pytest.raises(GeometryError):
        chart2.solve_L(0.9, -0.1)
    with pytest.raises(GeometryError):
        chart2.solve_L(0.1, 0.5)


def test_edge_points(chart2):
    z = -1.7
    y = z * chart2.edge_slope()
    assert chart2.solve_L(y, z) == pytest.approx(abs(y), rel=1e-12)
    dy, dz = chart2.grad_L(y, z)
    assert dy == pytest.approx(1.0, abs=1e-12)
    assert dz == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("lam", LAMBDAS)
def test_self_similarity_round_trip(lam):
    c = ConeChart(lam)
    ys = np.linspace(-0.99, 0.99, 41)
    for scale in (0.5, 1.0, 2.0, 10.0):
        L = c.solve_L(scale * ys, scale * np.asarray(phi(c.params, ys)))
        assert np.allclose(L, scale, rtol=1e-9, atol=0)


def test_grad_examples(chart2):
    assert chart2.grad_L(0.0, -2.0)[0] == 0.0
    h = 1e-6
    gy, gz = chart2.grad_L(0.3, -2.0)
    fy = (chart2.solve_L(0.3 + h, -2.0) - chart2.solve_L(0.3 - h, -2.0)) / (2 * h)
    fz = (chart2.solve_L(0.3, -2.0 + h) - chart2.solve_L(0.3, -2.0 - h)) / (2 * h)
    assert gy == pytest.approx(fy, abs=1e-6)
    assert gz == pytest.approx(fz, abs=1e-6)
    # approaching the lateral edge along a fixed level
    s = 1 - 1e-9
    gy, gz = chart2.grad_L(s, float(phi(chart2.params, s)))
    assert gy == pytest.approx(1.0, abs=1e-4)
    assert gz == pytest.approx(0.0, abs=1e-4)


@pytest.mark.parametrize("lam", LAMBDAS)
def test_gradient_bounds(lam):
    c = ConeChart(lam)
    y, z, _ = interior_points(c, 1000, seed=1, s_max=0.999999)
    gy, gz = c.grad_L(y, z)
    C, _, _ = laplacian_constants(c.params)
    assert np.all(np.abs(gy) <= 1.0 + 1e-12)
    assert np.all(np.abs(gz) <= (lam - 1) / -c.K + 1e-12)
    assert np.all(gy**2 + gz**2 <= C + 1e-12)


def test_q_examples(chart2):
    assert chart2.q_field(0.0, -2.0) == (0.0, 1.0)
    s = 1 - 1e-10
    q1, q2 = chart2.q_field(s, float(phi(chart2.params, s)))
    assert q1 == pytest.approx(-1.0, abs=1e-4)
    assert q2 == pytest.approx(0.0, abs=1e-4)
    y, z, _ = interior_points(chart2, 1000, seed=2, s_max=0.999)
    q1, q2 = chart2.q_field(y, z)
    assert np.max(np.abs(np.hypot(q1, q2) - 1.0)) <= 1e-15


def test_q_is_normal_to_level_curves(chart2):
    # grad L is parallel to q, so the L-derivative of q at fixed y annihilates grad L
    y, z, L = interior_points(chart2, 200, seed=3, s_max=0.8)
    d = 1e-6
    za = (L + d) * np.asarray(phi(chart2.params, y / (L + d)))
    zb = (L - d) * np.asarray(phi(chart2.params, y / (L - d)))
    qa = np.array(chart2.q_field(y, za))
    qb = np.array(chart2.q_field(y, zb))
    dq = (qa - qb) / (2 * d)
    gy, gz = chart2.grad_L(y, z)
    assert np.max(np.abs(dq[0] * gy + dq[1] * gz)) <= 1e-6


def test_div_residual_examples():
    assert ConeChart(2.0).div_residual(0.2, -3.0, 1e-4) <= 1e-5
    assert ConeChart(1.4).div_residual(0.1, -5.0, 1e-4) <= 1e-5


@pytest.mark.parametrize("lam", [1.2, 2.0, 5.0])
def test_div_residual_refines(lam):
    c = ConeChart(lam)
    y, z, _ = interior_points(c, 5, seed=4, s_max=0.6, L_range=(1.0, 3.0))
    for yi, zi in zip(y, z):
        r1 = c.div_residual(yi, zi, 1e-2)
        r2 = c.div_residual(yi, zi, 5e-3)
        assert r2 <= r1 / 2 or r2 < 1e-9


def test_div_residual_stencil_must_stay_inside(chart2):
    z = -1.0
    y = z * chart2.edge_slope() - 1e-5
    with pytest.raises(GeometryError):
        chart2.div_residual(y, z, 1e-4)


def test_laplacian_constants_examples():
    C, C1, C2 = laplacian_constants(make_params(2.0))
    assert C == pytest.approx(1 + (1 / 1.35796) ** 2, abs=1e-5)
    assert C == pytest.approx(1.5423, abs=1e-4)
    for lam in LAMBDAS:
        C, C1, C2 = laplacian_constants(make_params(lam))
        assert C > 1 and C1 > 0 and C2 > 0
    with pytest.raises(DomainError):
        laplacian_constants(1.0)


@pytest.mark.parametrize("lam", [1.2, 2.0, 5.0])
def test_second_derivative_max_sits_at_half(lam):
    p = make_params(lam)
    ys = np.linspace(0, 0.5, 2001)
    v = np.asarray(phi_second(p, ys))
    assert np.all(np.diff(v) > 0)


@pytest.mark.parametrize("lam", LAMBDAS)
def test_laplacian_bounds_by_finite_differences(lam):
    c = ConeChart(lam)
    C, C1, C2 = laplacian_constants(c.params)
    y, z, L = interior_points(c, 1000, seed=5, s_max=0.9)
    h = 1e-4 * L
    Lc = c.solve_L(y, z)
    lap = (
        c.solve_L(y + h, z) + c.solve_L(y - h, z) + c.solve_L(y, z + h) + c.solve_L(y, z - h) - 4 * Lc
    ) / h**2
    assert np.all(Lc * lap <= C1 + C2)
    L2 = lambda a, b: c.solve_L(a, b) ** 2  # noqa: E731
    lap2 = (L2(y + h, z) + L2(y - h, z) + L2(y, z + h) + L2(y, z - h) - 4 * Lc**2) / h**2
    assert np.all(lap2 >= -1e-4)
    assert np.all(lap2 <= 2 * (C + C1 + C2))
    # closed-form Laplacian agrees with the stencil
    assert np.allclose(np.asarray(c.laplacian_L(y, z)) * Lc, Lc * lap, rtol=1e-3, atol=1e-3)


@settings(max_examples=50, deadline=None)
@given(lam=st.floats(1.02, 30.0), s=st.floats(-0.999, 0.999), L=st.floats(0.05, 50.0))
def test_chart_round_trip_property(lam, s, L):
    c = ConeChart(lam)
    z = L * float(phi(c.params, s))
    assert c.in_closed_cone(L * s, z)
    assert c.solve_L(L * s, z) == pytest.approx(L, rel=1e-9)
    q1, q2 = c.q_field(L * s, z)
    assert abs(np.hypot(q1, q2) - 1.0) <= 1e-15
