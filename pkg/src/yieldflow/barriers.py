"""Explicit sub- and supersolution, the support gap ``Pi`` and its optimum.

Subsolution (built on the cone chart ``L0`` at ``lam0 < lam``)::

    u_sub = zeta0 (1 - y^2)            outside the cone
          = zeta0 (1 - L0^2)^+         inside the cone

with flux ``d_ext = (-sign y, 0)`` outside the cone and ``q_{lam0}`` inside.

Supersolution (chart ``L1`` at ``lam1 > lam``)::

    U = min(lam1 (1 - y^2) / 2,  u2),   u2 = +inf (L1 < 1), theta (L1 - b)^2 (1 <= L1 <= b), 0 (L1 >= b)

with flux ``q_ext = (-sign y, 0)`` where the paraboloid is active and
``q_{lam1}`` elsewhere.  The support of ``U`` is ``{z > b phi_{K(lam1)}(y/b)}``
and its depth below the certified liquid region ``{z > phi_{K(lam)}(y)}`` is
``Pi(lam, lam1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .cone import ConeChart, laplacian_constants
from .errors import ConvergenceError, DomainError
from .profiles import k_ratio_closed_form, make_params, phi, phi_prime

# ---------------------------------------------------------------------------
# gap function
# ---------------------------------------------------------------------------


def _check_pair(lam, lam1):
    lam, lam1 = float(lam), float(lam1)
    if not lam > 1.0:
        raise DomainError(f"lambda must exceed 1 (got {lam!r})")
    if not lam1 > lam:
        raise DomainError(f"lambda1 must exceed lambda (got {lam1!r} <= {lam!r})")
    return lam, lam1


def theta_coef(lam, lam1):
    """Coefficient of the cone-graded part of the supersolution.

    ``(lam1 - lam) / (2 (1 + ((lam1 - 1)/K(lam1))^2))``: the denominator is the
    gradient bound ``C`` of the ``lam1`` chart, which is what makes the
    supersolution inequality close.
    """
    lam, lam1 = _check_pair(lam, lam1)
    ratio = k_ratio_closed_form(lam1)  # |K(lam1)| / (lam1 - 1)
    return (lam1 - lam) / (2.0 * (1.0 + 1.0 / ratio**2))


def b_coef(lam, lam1):
    """Outer level ``b = 1 + sqrt(lam1 / (2 theta))`` where the supersolution vanishes."""
    return 1.0 + math.sqrt(float(lam1) / (2.0 * theta_coef(lam, lam1)))


def pi_gap(lam, lam1):
    """Vertical gap between the outer and inner support curves on the axis (positive)."""
    lam, lam1 = _check_pair(lam, lam1)
    return b_coef(lam, lam1) * k_ratio_closed_form(lam1) - k_ratio_closed_form(lam)


_SCAN_FACTORS = (1.05, 1.1, 1.2, 1.5, 2.0)
_MAX_FACTOR = 1e3


@dataclass(frozen=True)
class Lambda1Search:
    """Outcome of :func:`optimize_lambda1` including the bracket used."""

    lam: float
    lambda1: float
    pi: float
    bracket: tuple
    evaluations: int


def _scan_points(lam):
    yield from (lam * f for f in _SCAN_FACTORS)
    f = 4.0
    while f <= _MAX_FACTOR:
        yield lam * f
        f *= 2.0
    yield lam * _MAX_FACTOR


def search_lambda1(lam, tol=1e-6):
    """Bracket the V of ``Pi(lam, .)`` on a geometric scan, then golden-section it."""
    lam = float(lam)
    if not lam > 1.0:
        raise DomainError(f"lambda must exceed 1 (got {lam!r})")
    if not tol > 0.0:
        raise DomainError("tol must be positive")
    xs, fs = [], []
    bracket = None
    for x in _scan_points(lam):
        xs.append(x)
        fs.append(pi_gap(lam, x))
        if len(fs) >= 3 and fs[-2] < fs[-3] and fs[-2] < fs[-1]:
            bracket = (xs[-3], xs[-2], xs[-1])
            break
    if bracket is None:
        if len(fs) >= 2 and fs[0] < fs[1]:
            # minimum below the first scan point: refine towards lam
            left = lam + 0.5 * (xs[0] - lam)
            while pi_gap(lam, left) < fs[0]:
                if left - lam < 1e-12 * lam:
                    raise ConvergenceError("Pi minimum not bracketed near lambda")
                xs[0], fs[0], left = left, pi_gap(lam, left), lam + 0.5 * (left - lam)
            bracket = (left, xs[0], xs[1] if xs[1] > xs[0] else xs[0] * 1.05)
        else:
            raise ConvergenceError(f"Pi(lambda={lam}, .) not bracketed up to {_MAX_FACTOR} * lambda")
    a, m, c = bracket
    res = minimize_scalar(
        lambda x: pi_gap(lam, x),
        bracket=bracket,
        method="golden",
        options={"xtol": tol / (2.0 * m), "maxiter": 500},
    )
    if not res.success:
        raise ConvergenceError(f"golden-section search failed: {res.message}")
    x = float(res.x)
    return Lambda1Search(lam=lam, lambda1=x, pi=pi_gap(lam, x), bracket=(a, m, c), evaluations=len(fs) + int(res.nfev))


def optimize_lambda1(lam, tol=1e-6):
    """``(lambda1*, Pi(lam, lambda1*))`` minimizing the support gap."""
    r = search_lambda1(lam, tol)
    return r.lambda1, r.pi


def subsolution_params(lam, lam0):
    """Largest admissible ``zeta0 = (lam - lam0) / (2 (C + C1 + C2))``, constants at ``lam0``."""
    lam, lam0 = float(lam), float(lam0)
    if not 1.0 < lam0 < lam:
        raise DomainError(f"need 1 < lambda0 < lambda (got lambda0={lam0!r}, lambda={lam!r})")
    C, C1, C2 = laplacian_constants(lam0)
    return (lam - lam0) / (2.0 * (C + C1 + C2))


# ---------------------------------------------------------------------------
# the barrier pair
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BarrierPair:
    lam: float
    lam0: float
    zeta0: float
    lam1: float
    theta: float
    b: float
    chart0: ConeChart = field(repr=False)
    chart1: ConeChart = field(repr=False)

    @property
    def params(self):
        return make_params(self.lam)


def make_pair(lam, lam0=None, lam1=None, tol=1e-6):
    """Barrier pair with ``lam0 = (1 + lam)/2`` and ``lam1 = lambda1*`` by default."""
    lam = float(lam)
    if not lam > 1.0:
        raise DomainError(f"barriers exist only for lambda > 1 (got {lam!r})")
    lam0 = 0.5 * (1.0 + lam) if lam0 is None else float(lam0)
    if lam1 is None:
        lam1, _ = optimize_lambda1(lam, tol)
    lam1 = float(lam1)
    zeta0 = subsolution_params(lam, lam0)
    return BarrierPair(
        lam=lam,
        lam0=lam0,
        zeta0=zeta0,
        lam1=lam1,
        theta=theta_coef(lam, lam1),
        b=b_coef(lam, lam1),
        chart0=ConeChart(make_params(lam0)),
        chart1=ConeChart(make_params(lam1)),
    )


def _domain(y, z):
    y, z = np.broadcast_arrays(np.asarray(y, dtype=np.float64), np.asarray(z, dtype=np.float64))
    if np.any(np.abs(y) > 1.0 + 1e-14) or np.any(z > 0.0) or np.any(np.isnan(y) | np.isnan(z)):
        raise DomainError("points must lie in the closed half-strip |y| <= 1, z <= 0")
    return y, z


def _out(val, like):
    return float(val) if np.ndim(like) == 0 else val


def _levels(chart, y, z):
    """Chart level at each point, NaN outside the open cone (axis included)."""
    inside = (np.abs(y) < z * chart.edge_slope()) & (z < 0.0)
    pt = chart.local(np.where(inside, y, 0.0), np.where(inside, z, -1.0), strict=False)
    return inside, np.where(inside, pt.L, np.nan), pt


def subsolution_eval(pair, y, z):
    y0 = y
    y, z = _domain(y, z)
    inside, L, _ = _levels(pair.chart0, y, z)
    zeta = pair.zeta0
    with np.errstate(invalid="ignore"):
        val = np.where(inside, zeta * np.maximum(1.0 - L * L, 0.0), zeta * (1.0 - y * y))
    return _out(np.maximum(val, 0.0), y0)


def subsolution_flux(pair, y, z):
    """``d_ext``: ``(-sign y, 0)`` outside the cone, ``q_{lam0}`` inside."""
    y, z = _domain(y, z)
    inside, _, pt = _levels(pair.chart0, y, z)
    q1, q2 = pair.chart0._q(pt)
    return np.where(inside, q1, -np.sign(y)), np.where(inside, q2, 0.0)


def _super_parts(pair, y, z):
    inside, L, pt = _levels(pair.chart1, y, z)
    u1 = 0.5 * pair.lam1 * (1.0 - y * y)
    with np.errstate(invalid="ignore"):
        u2 = np.where(inside & (L >= 1.0), pair.theta * np.square(np.minimum(L - pair.b, 0.0)), np.inf)
    return u1, u2, inside, L, pt


def supersolution_eval(pair, y, z):
    """``min(u1, u2)``; finite on the closed strip (``u2`` alone may be ``+inf``)."""
    y0 = y
    y, z = _domain(y, z)
    u1, u2, *_ = _super_parts(pair, y, z)
    return _out(np.minimum(u1, u2), y0)


def switch_level(pair, y):
    """Level ``b - sqrt(lam1 (1 - y^2) / (2 theta))`` where ``u1 = u2``."""
    y = np.asarray(y, dtype=np.float64)
    return pair.b - np.sqrt(pair.lam1 * np.maximum(1.0 - y * y, 0.0) / (2.0 * pair.theta))


def supersolution_flux(pair, y, z):
    """``q_ext``: ``(-sign y, 0)`` where the paraboloid branch is active, ``q_{lam1}`` elsewhere."""
    y, z = _domain(y, z)
    _, _, inside, L, pt = _super_parts(pair, y, z)
    with np.errstate(invalid="ignore"):
        para = ~inside | (L < switch_level(pair, y))
    q1, q2 = pair.chart1._q(pt)
    return np.where(para, -np.sign(y), q1), np.where(para, 0.0, q2)


def support_curves(pair, n_samples=201):
    """Inner curve ``phi_{K(lam)}`` and outer curve ``b phi_{K(lam1)}(y / b)`` on ``[-1, 1]``."""
    if n_samples < 2:
        raise DomainError("n_samples must be at least 2")
    y = np.linspace(-1.0, 1.0, int(n_samples))
    inner = np.asarray(phi(make_params(pair.lam), y))
    outer = pair.b * np.asarray(phi(pair.chart1.params, y / pair.b))
    return np.column_stack([y, inner]), np.column_stack([y, outer])


def inner_curve(pair, y):
    return phi(make_params(pair.lam), y)


def outer_curve(pair, y):
    y = np.asarray(y, dtype=np.float64)
    return _out(pair.b * np.asarray(phi(pair.chart1.params, y / pair.b)), y)


# ---------------------------------------------------------------------------
# discrete inequality checks
# ---------------------------------------------------------------------------


@dataclass
class InequalityGrid:
    """Pointwise finite-difference residual of one barrier inequality.

    ``residual`` is ``-lap u - div(|z| d) - lam``; the subsolution needs it
    ``<= 0`` and the supersolution ``>= 0``.  ``tube`` marks nodes within
    ``2h`` of an interface, where the pointwise inequality holds only in the
    distributional sense.
    """

    kind: str
    h: float
    y: np.ndarray
    z: np.ndarray
    residual: np.ndarray
    tube: np.ndarray
    ok: np.ndarray

    @property
    def off_tube_fraction(self):
        sel = ~self.tube
        return float(np.count_nonzero(self.ok & sel)) / max(int(np.count_nonzero(sel)), 1)

    @property
    def failures_in_tube(self):
        return int(np.count_nonzero(~self.ok & self.tube))

    @property
    def failures_off_tube(self):
        return int(np.count_nonzero(~self.ok & ~self.tube))


def _fd_residual(u, flux, yy, zz, h, lam):
    """``-lap u - div(|z| d) - lam`` at interior nodes; fluxes sampled at edge midpoints."""
    lap = (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4.0 * u[1:-1, 1:-1]) / (h * h)
    yi, zi = yy[1:-1, 1:-1], zz[1:-1, 1:-1]
    d1p, _ = flux(yi + 0.5 * h, zi)
    d1m, _ = flux(yi - 0.5 * h, zi)
    _, d2p = flux(yi, np.minimum(zi + 0.5 * h, 0.0))
    _, d2m = flux(yi, zi - 0.5 * h)
    div = np.abs(zi) * (d1p - d1m) / h + (np.abs(zi + 0.5 * h) * d2p - np.abs(zi - 0.5 * h) * d2m) / h
    return -lap - div - lam


def _level_tube(g, h):
    """Nodes with ``|g| / |grad g| < 2h`` (grid gradient), NaN treated as far away."""
    gy, gz = np.gradient(g, h, h)
    with np.errstate(invalid="ignore", divide="ignore"):
        dist = np.abs(g) / np.hypot(gy, gz)
    return np.nan_to_num(dist, nan=np.inf) < 2.0 * h


def _grid(depth, h):
    ny = int(round(2.0 / h)) + 1
    nz = int(round(depth / h)) + 1
    y = np.linspace(-1.0, 1.0, ny)
    z = np.linspace(-(nz - 1) * h, 0.0, nz)
    return np.meshgrid(y, z, indexing="ij")


def default_check_depth(pair):
    """25% below the deepest point of the supersolution support."""
    return 1.25 * pair.b * (-pair.chart1.params.K) / (pair.lam1 - 1.0)


def subsolution_grid(pair, h=1.0 / 256.0, depth=None, tol=0.0):
    depth = default_check_depth(pair) if depth is None else float(depth)
    yy, zz = _grid(depth, h)
    u = subsolution_eval(pair, yy, zz)
    res = _fd_residual(u, lambda a, c: subsolution_flux(pair, a, c), yy, zz, h, pair.lam)
    ch = pair.chart0
    inside, L, _ = _levels(ch, yy, zz)
    # cone edges |y| = z lam0 / K0 as lines through the origin
    sl = ch.edge_slope()
    edge_dist = np.abs(np.abs(yy) - zz * sl) / math.sqrt(1.0 + sl * sl)
    tube = (edge_dist < 2.0 * h) | _level_tube(np.where(inside, L - 1.0, np.nan), h)
    tube = tube[1:-1, 1:-1]
    ok = res <= tol
    return InequalityGrid("sub", h, yy[1:-1, 1:-1], zz[1:-1, 1:-1], res, tube, ok)


def supersolution_grid(pair, h=1.0 / 256.0, depth=None, tol=0.0):
    depth = default_check_depth(pair) if depth is None else float(depth)
    yy, zz = _grid(depth, h)
    u = supersolution_eval(pair, yy, zz)
    res = _fd_residual(u, lambda a, c: supersolution_flux(pair, a, c), yy, zz, h, pair.lam)
    inside, L, _ = _levels(pair.chart1, yy, zz)
    switch = np.where(inside, L - switch_level(pair, yy), np.nan)
    # the paraboloid region reaches the axis, where (-sign y, 0) flips
    with np.errstate(invalid="ignore"):
        para = ~inside | (L < switch_level(pair, yy))
    tube = _level_tube(switch, h) | (para & (np.abs(yy) < 2.0 * h))
    tube = tube[1:-1, 1:-1]
    ok = res >= -tol
    return InequalityGrid("super", h, yy[1:-1, 1:-1], zz[1:-1, 1:-1], res, tube, ok)


# ---------------------------------------------------------------------------
# interface checks
# ---------------------------------------------------------------------------


def base_curve_jump(pair, n=101):
    """Flux jump ``-2 zeta0 sqrt(1 + psi'^2) / (y psi' - psi)`` along the ``lam0`` base curve.

    Non-positive values are what the subsolution needs.
    """
    p0 = pair.chart0.params
    y = np.linspace(-0.99, 0.99, int(n))
    psi = np.asarray(phi(p0, y))
    dpsi = np.asarray(phi_prime(p0, y))
    return y, -2.0 * pair.zeta0 * np.sqrt(1.0 + dpsi * dpsi) / (y * dpsi - psi)


def edge_trace_mismatch(pair, n=101):
    """Max mismatch of ``grad u_sub`` and ``d_ext`` traces across the ``lam0`` cone edges."""
    ch = pair.chart0
    zs = -np.linspace(0.01, 1.0, int(n)) * (-ch.K / ch.lam)
    worst = 0.0
    for sgn in (-1.0, 1.0):
        y = sgn * zs * ch.edge_slope()
        pt = ch.local(y, zs)
        ly, lz = ch._derivs(pt)
        q1, q2 = ch._q(pt)
        gin = (-2.0 * pair.zeta0 * pt.L * ly, -2.0 * pair.zeta0 * pt.L * lz)
        gout = (-2.0 * pair.zeta0 * y, 0.0)
        worst = max(
            worst,
            float(np.max(np.abs(gin[0] - gout[0]))),
            float(np.max(np.abs(gin[1] - gout[1]))),
            float(np.max(np.abs(q1 + np.sign(y)))),
            float(np.max(np.abs(q2))),
        )
    return worst


def switch_trace_mismatch(pair, n=101):
    """Max ``|u1 - u2|`` on the contour ``L1 = switch_level(y)``."""
    ch = pair.chart1
    ys = np.linspace(-0.95, 0.95, int(n))
    Ls = switch_level(pair, ys)
    ok = Ls > np.abs(ys)
    ys, Ls = ys[ok], Ls[ok]
    zs = np.asarray(ch.forward(Ls, ys))
    u1 = 0.5 * pair.lam1 * (1.0 - ys * ys)
    L = np.asarray(ch.local(ys, zs).L)
    u2 = pair.theta * (L - pair.b) ** 2
    return float(np.max(np.abs(u1 - u2)))


__all__ = [
    "BarrierPair",
    "InequalityGrid",
    "Lambda1Search",
    "b_coef",
    "base_curve_jump",
    "default_check_depth",
    "edge_trace_mismatch",
    "inner_curve",
    "make_pair",
    "optimize_lambda1",
    "outer_curve",
    "pi_gap",
    "search_lambda1",
    "subsolution_eval",
    "subsolution_flux",
    "subsolution_grid",
    "subsolution_params",
    "supersolution_eval",
    "supersolution_flux",
    "supersolution_grid",
    "support_curves",
    "switch_level",
    "switch_trace_mismatch",
    "theta_coef",
]
