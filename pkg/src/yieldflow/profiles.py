"""Closed-form yield-curve profiles.

``f_lambda`` is the explicit primitive whose inverse generates the profile

    phi_K(y) = K * f^{-1}( f(1/(lam-1)) + |y| / K ),    |y| <= 1,

with ``K = K(lam) < 0`` chosen so that ``phi_K`` is defined on exactly
``[-1, 1]``.  The graph of ``phi_K`` is the lower bound of the liquid region
and, rescaled, the level curves of the cone chart in :mod:`yieldflow.cone`.

Internally every point of the profile is represented by the angle
``theta = arcsin((lam**2 - 1) * Z - lam)``; see :mod:`yieldflow.kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError

BRACKET_SLACK = 1e-14
RANGE_SLACK = 1e-12
MIN_LAMBDA_GAP = 1e-9


def _check_lambda(lam):
    lam = float(lam)
    if not lam > 1.0 + MIN_LAMBDA_GAP:
        raise DomainError(f"lambda must exceed 1 (got {lam!r})")
    return lam


def _scalar_or_array(x, like):
    if np.ndim(like) == 0:
        return float(np.asarray(x).item())
    return x


# --------------------------------------------------------------------------
# angle parametrisation helpers
# --------------------------------------------------------------------------


def angle_bounds(lam):
    """Angles of the bracket ends ``Z = 1/lam`` and ``Z = 1/(lam - 1)``."""
    return -math.asin(1.0 / lam), 0.5 * math.pi


def z_of_angle(lam, theta):
    return (np.sin(theta) + lam) / (lam * lam - 1.0)


def f_of_angle(lam, theta):
    return (theta - lam * np.cos(theta)) / (lam * lam - 1.0) ** 1.5


def slope_of_angle(lam, theta):
    """``|phi'|`` at the profile point with angle ``theta`` (infinite at the wall)."""
    den = 1.0 + lam * np.sin(theta)
    with np.errstate(divide="ignore"):
        return math.sqrt(lam * lam - 1.0) * np.cos(theta) / den


def inverse_slope_of_angle(lam, theta):
    """``1/|phi'|``, i.e. ``f'(Z)``; infinite on the symmetry axis."""
    with np.errstate(divide="ignore"):
        return (1.0 + lam * np.sin(theta)) / (math.sqrt(lam * lam - 1.0) * np.cos(theta))


def curvature_factor_of_angle(lam, theta):
    """``-phi * phi''`` as a function of the angle.

    From the first-order relation ``1/sqrt(1 + phi'**2) = (1 + lam sin t)/(lam + sin t)``
    the second-derivative formula collapses to
    ``(lam**2 - 1) (lam + sin t)**2 / (1 + lam sin t)**3``.
    """
    st = np.sin(theta)
    with np.errstate(divide="ignore"):
        return (lam * lam - 1.0) * (lam + st) ** 2 / (1.0 + lam * st) ** 3


# --------------------------------------------------------------------------
# f and its inverse
# --------------------------------------------------------------------------


def _check_bracket(lam, Z, open_interval=False):
    lo, hi = 1.0 / lam, 1.0 / (lam - 1.0)
    Z = np.asarray(Z, dtype=np.float64)
    slack = BRACKET_SLACK * max(1.0, hi)
    if open_interval:
        bad = (Z <= lo) | (Z >= hi)
    else:
        bad = (Z < lo - slack) | (Z > hi + slack)
    if np.any(bad) or np.any(np.isnan(Z)):
        kind = "open" if open_interval else "closed"
        raise DomainError(f"Z outside the {kind} bracket [1/lam, 1/(lam-1)] = [{lo}, {hi}]")
    return np.clip(Z, lo, hi)


def f_lambda(lam, Z):
    """Evaluate ``f_lam(Z)`` on ``[1/lam, 1/(lam-1)]``; accepts scalars or arrays."""
    lam = _check_lambda(lam)
    Zc = _check_bracket(lam, Z)
    s = np.clip((lam * lam - 1.0) * Zc - lam, -1.0, 1.0)
    val = (np.arcsin(s) - lam * np.sqrt(1.0 - s * s)) / (lam * lam - 1.0) ** 1.5
    return _scalar_or_array(val, Z)


def f_lambda_prime(lam, Z):
    """Derivative of ``f_lam``; rejects the endpoints where it is 0 or infinite."""
    lam = _check_lambda(lam)
    Zc = _check_bracket(lam, Z, open_interval=True)
    s = (lam * lam - 1.0) * Zc - lam
    val = (lam * Zc - 1.0) * math.sqrt(lam * lam - 1.0) / np.sqrt(1.0 - s * s)
    return _scalar_or_array(val, Z)


def f_lambda_inverse(lam, v, tol=1e-12):
    """Solve ``f_lam(Z) = v`` for ``Z`` in the bracket.

    Uses safeguarded Newton on the angle variable (where ``f`` is analytic),
    falling back to bisection whenever a Newton step leaves the bracket.
    """
    lam = _check_lambda(lam)
    v_arr = np.asarray(v, dtype=np.float64)
    f_lo = f_of_angle(lam, angle_bounds(lam)[0])
    f_hi = f_of_angle(lam, angle_bounds(lam)[1])
    slack = RANGE_SLACK * max(1.0, abs(f_lo), abs(f_hi))
    if np.any(v_arr < f_lo - slack) or np.any(v_arr > f_hi + slack) or np.any(np.isnan(v_arr)):
        raise DomainError(f"value outside the range [{f_lo}, {f_hi}] of f_lambda")
    theta = kernels.f_angle_inverse(np.clip(v_arr, f_lo, f_hi), lam)
    Z = np.clip(z_of_angle(lam, theta), 1.0 / lam, 1.0 / (lam - 1.0))
    resid = np.abs(f_of_angle(lam, theta) - np.clip(v_arr, f_lo, f_hi))
    if np.any(resid > max(tol, 64 * np.finfo(float).eps * max(abs(f_lo), abs(f_hi)))):
        # cannot happen for a monotone analytic function; kept as a guard
        raise DomainError("f_lambda_inverse failed to reach tolerance")
    return _scalar_or_array(Z, v)


# --------------------------------------------------------------------------
# parameters and the profile
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LambdaParams:
    """Load ``lam > 1`` with the derived profile constants."""

    lam: float
    K: float
    A_lambda: float
    phi_min: float
    phi_max: float

    @property
    def f_top(self):
        return f_of_angle(self.lam, 0.5 * math.pi)

    @property
    def theta_min(self):
        return angle_bounds(self.lam)[0]


def k_ratio_closed_form(lam):
    """``|K(lam)| / (lam - 1)`` from the explicit arcsine expression."""
    r = math.sqrt(lam * lam - 1.0)
    return 2.0 * (lam + 1.0) * r / (2.0 * r + math.pi + 2.0 * math.asin(1.0 / lam))


def a_lambda_closed_form(lam):
    c = lam * lam - 1.0
    return math.pi / (2.0 * c**1.5) + (1.0 + math.asin(1.0 / lam) / math.sqrt(c)) / c


def make_params(lam):
    lam = _check_lambda(lam)
    # the angle form of the bracket ends avoids the arcsine cancellation near lam = 1
    t_lo, t_hi = angle_bounds(lam)
    A_lam = float(f_of_angle(lam, t_hi) - f_of_angle(lam, t_lo))
    K = -1.0 / A_lam
    ratio = k_ratio_closed_form(lam)
    if abs(abs(K) / (lam - 1.0) - ratio) > 1e-12 * max(1.0, ratio):
        raise DomainError(f"K({lam}) inconsistent with its closed form")
    return LambdaParams(lam=lam, K=K, A_lambda=A_lam, phi_min=K / (lam - 1.0), phi_max=K / lam)


def _as_params(p):
    return p if isinstance(p, LambdaParams) else make_params(p)


def _check_y(y, closed=True):
    y = np.asarray(y, dtype=np.float64)
    if closed:
        bad = np.abs(y) > 1.0 + BRACKET_SLACK
    else:
        bad = np.abs(y) >= 1.0
    if np.any(bad) or np.any(np.isnan(y)):
        raise DomainError("y must satisfy |y| <= 1" if closed else "y must satisfy |y| < 1")
    return np.clip(y, -1.0, 1.0)


def profile_angle(params, y):
    """Angle of the profile point above ``y``; ``pi/2`` at ``y = 0``."""
    ay = np.abs(np.asarray(y, dtype=np.float64))
    f_lo = f_of_angle(params.lam, params.theta_min)
    v = np.clip(params.f_top + ay / params.K, f_lo, params.f_top)
    return kernels.f_angle_inverse(v, params.lam)


def phi(params, y):
    """The profile ``phi_{K(lam)}(y)``, even, convex, in ``[phi_min, phi_max]``."""
    params = _as_params(params)
    yc = _check_y(y)
    theta = profile_angle(params, yc)
    val = params.K * z_of_angle(params.lam, theta)
    val = np.where(np.abs(yc) == 0.0, params.phi_min, val)
    val = np.where(np.abs(yc) == 1.0, params.phi_max, val)
    return _scalar_or_array(val, y)


def phi_prime(params, y):
    """Slope of the profile from the first-order relation ``phi (lam - 1/sqrt(1+phi'^2)) = K``."""
    params = _as_params(params)
    yc = _check_y(y, closed=False)
    theta = profile_angle(params, yc)
    val = np.sign(yc) * slope_of_angle(params.lam, theta)
    return _scalar_or_array(val, y)


def phi_second(params, y):
    """``phi'' = (1 + phi'^2)(lam sqrt(1 + phi'^2) - 1) / (-phi)``, strictly positive."""
    params = _as_params(params)
    yc = _check_y(y, closed=False)
    theta = profile_angle(params, yc)
    phi_val = params.K * z_of_angle(params.lam, theta)
    val = curvature_factor_of_angle(params.lam, theta) / (-phi_val)
    return _scalar_or_array(val, y)


def ode_residual(params, y):
    """Absolute residual of ``phi phi''/(1+phi'^2)^{3/2} - 1/sqrt(1+phi'^2) + lam``."""
    params = _as_params(params)
    p = np.asarray(phi(params, y))
    d1 = np.asarray(phi_prime(params, y))
    d2 = np.asarray(phi_second(params, y))
    g = 1.0 + d1 * d1
    val = np.abs(p * d2 / g**1.5 - 1.0 / np.sqrt(g) + params.lam)
    return _scalar_or_array(val, y)
