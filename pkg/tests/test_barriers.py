import math

import numpy as np
import pytest

from yieldflow.barriers import (
    b_coef,
    base_curve_jump,
    edge_trace_mismatch,
    make_pair,
    optimize_lambda1,
    pi_gap,
    search_lambda1,
    subsolution_eval,
    subsolution_grid,
    subsolution_params,
    supersolution_eval,
    supersolution_flux,
    supersolution_grid,
    support_curves,
    switch_level,
    switch_trace_mismatch,
    theta_coef,
)
from yieldflow.cone import laplacian_constants
from yieldflow.errors import DomainError
from yieldflow.profiles import make_params, phi

TABLE = [
    (1.2, 1.59451, 3.20584),
    (1.4, 1.84198, 3.66274),
    (1.6, 2.09337, 4.16455),
    (1.8, 2.34819, 4.69225),
]


@pytest.fixture(scope="module")
def pair2():
    return make_pair(2.0)


def test_coefficients_follow_definitions():
    lam, lam1 = 1.4, 2.1
    K1 = make_params(lam1).K
    # the chart gradient bound C(lam1) is the denominator
    theta = (lam1 - lam) / (2 * (1 + ((lam1 - 1) / K1) ** 2))
    assert theta_coef(lam, lam1) == pytest.approx(theta, rel=1e-12)
    assert b_coef(lam, lam1) == pytest.approx(1 + math.sqrt(lam1 / (2 * theta)), rel=1e-12)
    K = make_params(lam).K
    gap = -K1 / (lam1 - 1) * b_coef(lam, lam1) + K / (lam - 1)
    assert pi_gap(lam, lam1) == pytest.approx(gap, rel=1e-12)


@pytest.mark.parametrize("lam, lam1, pi", TABLE)
def test_pi_table_values(lam, lam1, pi):
    assert pi_gap(lam, lam1) == pytest.approx(pi, abs=1e-4)


@pytest.mark.parametrize("lam, lam1, pi", TABLE)
def test_optimize_table(lam, lam1, pi):
    x, p = optimize_lambda1(lam)
    assert x == pytest.approx(lam1, abs=1e-4)
    assert p == pytest.approx(pi, abs=1e-4)
    res = search_lambda1(lam)
    a, m, c = res.bracket
    assert a < res.lambda1 < c


def test_pi_limits():
    for lam in (1.2, 1.4, 2.0):
        far = [pi_gap(lam, f * lam) for f in (10.0, 100.0, 1000.0)]
        near = [pi_gap(lam, lam + 10.0**-k) for k in range(1, 5)]
        assert all(a < b for a, b in zip(far, far[1:]))
        assert all(a < b for a, b in zip(near, near[1:]))
    assert all(pi_gap(lam, lam1) > 0 for lam in (1.1, 1.5, 3.0) for lam1 in (lam + 1e-3, 2 * lam, 50 * lam))


def test_gap_errors():
    with pytest.raises(DomainError):
        pi_gap(1.0, 2.0)
    with pytest.raises(DomainError):
        pi_gap(2.0, 1.9)
    with pytest.raises(DomainError):
        optimize_lambda1(0.9)


def test_table_trends():
    rows = [optimize_lambda1(lam) for lam, _, _ in TABLE]
    diffs = [x - lam for (x, _), (lam, _, _) in zip(rows, TABLE)]
    pis = [p for _, p in rows]
    assert all(a < b for a, b in zip(diffs, diffs[1:]))
    assert all(a < b for a, b in zip(pis, pis[1:]))


def test_subsolution_params():
    for lam, lam0 in [(2.0, 1.5), (1.2, 1.1), (5.0, 3.0), (1.5, 1.01)]:
        z0 = subsolution_params(lam, lam0)
        C, C1, C2 = laplacian_constants(lam0)
        assert z0 == pytest.approx((lam - lam0) / (2 * (C + C1 + C2)), rel=1e-14)
        assert 0 < z0 < lam / 2
    vals = [subsolution_params(2.0, 2.0 - 10.0**-k) for k in range(1, 6)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-6
    with pytest.raises(DomainError):
        subsolution_params(2.0, 2.5)
    with pytest.raises(DomainError):
        subsolution_params(2.0, 1.0)


def test_pair_defaults(pair2):
    assert pair2.lam0 == 1.5
    assert pair2.lam1 == pytest.approx(2.60547, abs=1e-4)
    assert pair2.b == pytest.approx(3.32286, abs=1e-4)
    assert pair2.zeta0 == pytest.approx(subsolution_params(2.0, 1.5), rel=1e-14)
    with pytest.raises(DomainError):
        make_pair(1.0)


def test_subsolution_values(pair2):
    z = np.linspace(-5, 0, 11)
    assert np.all(subsolution_eval(pair2, np.ones_like(z), z) == 0.0)
    assert np.all(subsolution_eval(pair2, -np.ones_like(z), z) == 0.0)
    assert subsolution_eval(pair2, 0.0, 0.0) == pair2.zeta0
    y = np.linspace(-0.99, 0.99, 51)
    base = np.asarray(phi(pair2.chart0.params, y))
    assert np.max(np.abs(subsolution_eval(pair2, y, base))) <= 1e-9
    # non-negative and vanishing below the base curve
    yy, zz = np.meshgrid(np.linspace(-1, 1, 81), np.linspace(-3, 0, 121), indexing="ij")
    u = subsolution_eval(pair2, yy, zz)
    assert np.all(u >= 0) and np.all(u <= pair2.zeta0)
    below = zz < np.asarray(phi(pair2.chart0.params, yy)) - 1e-9
    assert np.all(u[below] == 0.0)


def test_subsolution_is_continuous(pair2):
    yy, zz = np.meshgrid(np.linspace(-1, 1, 401), np.linspace(-2, 0, 401), indexing="ij")
    u = subsolution_eval(pair2, yy, zz)
    h = yy[1, 0] - yy[0, 0]
    # Lipschitz bound: |grad u| <= 2 zeta0 L |grad L| <= 2 zeta0 sqrt(C)
    bound = 2 * pair2.zeta0 * math.sqrt(laplacian_constants(pair2.lam0)[0]) * 1.01
    assert np.max(np.abs(np.diff(u, axis=0))) <= bound * h
    assert np.max(np.abs(np.diff(u, axis=1))) <= bound * (zz[0, 1] - zz[0, 0])


def test_supersolution_values(pair2):
    assert supersolution_eval(pair2, 0.0, 0.0) == pytest.approx(pair2.lam1 / 2, rel=1e-15)
    ch = pair2.chart1
    y = np.linspace(-0.9, 0.9, 31)
    z = np.asarray(ch.forward(pair2.b, y))
    # the level L = b is recovered only up to round-off, and u2 is quadratic there
    assert np.max(supersolution_eval(pair2, y, z)) <= 1e-25
    for scale in (1.2 * pair2.b, 3 * pair2.b):
        z = np.asarray(ch.forward(scale, y))
        assert np.all(supersolution_eval(pair2, y, z) == 0.0)
    assert switch_trace_mismatch(pair2) <= 1e-10


def test_supersolution_support(pair2):
    yy, zz = np.meshgrid(np.linspace(-0.999, 0.999, 101), np.linspace(-10, 0, 201), indexing="ij")
    U = supersolution_eval(pair2, yy, zz)
    outer = np.asarray(phi(pair2.chart1.params, yy / pair2.b)) * pair2.b
    margin = 1e-9
    assert np.all(U[zz > outer + margin] > 0)
    assert np.all(U[zz < outer - margin] == 0)
    assert np.all(np.isfinite(U))


def test_supersolution_flux_is_a_subgradient(pair2):
    yy, zz = np.meshgrid(np.linspace(-0.99, 0.99, 41), np.linspace(-8, -0.01, 41), indexing="ij")
    q1, q2 = supersolution_flux(pair2, yy, zz)
    n = np.hypot(q1, q2)
    assert np.all(n <= 1.0 + 1e-14)
    # unit off the axis; on the axis the paraboloid has zero gradient and q = 0 is admissible
    assert np.allclose(n[yy != 0], 1.0, atol=1e-14)


def test_switch_level_shape(pair2):
    assert switch_level(pair2, 1.0) == pytest.approx(pair2.b)
    assert switch_level(pair2, 0.0) < switch_level(pair2, 0.5) < pair2.b


def test_support_curves(pair2):
    inner, outer = support_curves(pair2, 401)
    K = make_params(2.0).K
    mid = 200
    assert inner[mid, 1] == pytest.approx(K / 1.0, rel=1e-12)
    K1 = pair2.chart1.K
    assert outer[mid, 1] == pytest.approx(pair2.b * K1 / (pair2.lam1 - 1), rel=1e-12)
    assert inner[mid, 1] - outer[mid, 1] == pytest.approx(pi_gap(2.0, pair2.lam1), rel=1e-12)
    assert inner[0, 1] == pytest.approx(K / 2.0, rel=1e-12) and inner[0, 1] < 0
    assert np.all(inner[:, 1] > outer[:, 1])
    with pytest.raises(DomainError):
        support_curves(pair2, 1)


@pytest.mark.parametrize("lam", [1.2, 2.0, 3.0])
def test_interface_signs(lam):
    pair = make_pair(lam)
    _, jump = base_curve_jump(pair)
    assert np.all(jump <= 0)
    assert edge_trace_mismatch(pair) <= 1e-8
    assert switch_trace_mismatch(pair) <= 1e-8


@pytest.mark.parametrize("lam", [1.2, 2.0])
def test_inequality_grids_coarse(lam):
    pair = make_pair(lam)
    sub = subsolution_grid(pair, h=1 / 64)
    sup = supersolution_grid(pair, h=1 / 64)
    assert sub.off_tube_fraction >= 0.999
    assert sup.off_tube_fraction >= 0.999
    assert sub.failures_off_tube == 0
    assert sup.failures_off_tube == 0
    # the subsolution strictly undercuts the load away from its support
    assert np.all(sub.residual[~sub.tube] <= 0)
