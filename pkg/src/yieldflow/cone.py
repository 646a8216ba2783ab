"""Self-similar chart of the cone below the surface.

Inside the cone ``0 < |y| < z lam / K`` every point lies on exactly one
rescaled profile ``z = L * phi_K(y / L)``; ``L(y, z)`` is the chart.  The unit
normals ``q`` of these level curves solve ``-div(|z| q) = lam`` exactly, which
is what the barrier functions are built from.

All quantities are evaluated in closed form from the profile angle of the
level curve through the point (see :mod:`yieldflow.profiles`), so the only
numerical solve per point is a safeguarded Newton iteration for that angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError, GeometryError
from .profiles import (
    LambdaParams,
    _as_params,
    curvature_factor_of_angle,
    f_of_angle,
    inverse_slope_of_angle,
    phi,
    phi_prime,
    phi_second,
    slope_of_angle,
    z_of_angle,
)


@dataclass(frozen=True)
class ChartPoint:
    """Closed-form local data of the chart at a batch of points.

    ``s = |y| / L`` is the position along the base profile, ``psi`` the base
    profile value there, ``slope = |psi'|`` and ``inv_slope = 1/|psi'|``
    (either may be infinite at an end of the profile).
    """

    sign: np.ndarray
    theta: np.ndarray
    L: np.ndarray
    s: np.ndarray
    psi: np.ndarray
    slope: np.ndarray
    inv_slope: np.ndarray


class ConeChart:
    """Evaluator of ``L``, its derivatives and the unit field ``q`` for one ``lam``."""

    def __init__(self, params):
        self.params: LambdaParams = _as_params(params)

    @property
    def lam(self):
        return self.params.lam

    @property
    def K(self):
        return self.params.K

    def __repr__(self):
        return f"ConeChart(lam={self.lam!r})"

    # ------------------------------------------------------------------ sets

    def edge_slope(self):
        """``lam / K``: the cone is ``|y| < z * edge_slope``."""
        return self.lam / self.K

    def in_cone(self, y, z):
        y = np.asarray(y, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        res = (np.abs(y) > 0.0) & (np.abs(y) < z * self.edge_slope())
        return bool(res) if res.ndim == 0 else res

    def in_closed_cone(self, y, z):
        """Closure of the cone inside ``z <= 0``, origin excluded."""
        y = np.asarray(y, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        res = (z <= 0.0) & (np.abs(y) <= z * self.edge_slope()) & ~((y == 0.0) & (z == 0.0))
        return bool(res) if res.ndim == 0 else res

    # ----------------------------------------------------------------- chart

    def _check(self, y, z):
        y, z = np.broadcast_arrays(np.asarray(y, dtype=np.float64), np.asarray(z, dtype=np.float64))
        if np.any((y == 0.0) & (z == 0.0)):
            raise GeometryError("the chart is undefined at the origin")
        if np.any(z > 0.0):
            raise GeometryError("points must satisfy z <= 0")
        return y, z

    def local(self, y, z, strict=True):
        """Chart data at points of the closed cone.

        With ``strict`` a :class:`GeometryError` is raised for any point outside
        the closed cone; otherwise those entries come back as NaN.
        """
        y, z = self._check(y, z) if strict else np.broadcast_arrays(
            np.asarray(y, dtype=np.float64), np.asarray(z, dtype=np.float64)
        )
        lam, K = self.lam, self.K
        theta = kernels.cone_angles(y, z, lam, K)
        # points on the cone edge up to round-off
        edge = np.abs(np.abs(y) - z * self.edge_slope()) <= 1e-14 * np.maximum(1.0, np.abs(y))
        theta = np.where(np.isnan(theta) & edge & (z < 0.0), self.params.theta_min, theta)
        if strict and np.any(np.isnan(theta)):
            raise GeometryError("point outside the closed cone")
        Zt = z_of_angle(lam, theta)
        with np.errstate(invalid="ignore", divide="ignore"):
            L = z / (K * Zt)
            L = np.where(theta == self.params.theta_min, np.abs(y), L)
            s = np.clip(-K * (self.params.f_top - f_of_angle(lam, theta)), 0.0, 1.0)
            s = np.where(theta == self.params.theta_min, 1.0, s)
        return ChartPoint(
            sign=np.sign(y),
            theta=theta,
            L=L,
            s=s,
            psi=K * Zt,
            slope=slope_of_angle(lam, theta),
            inv_slope=inverse_slope_of_angle(lam, theta),
        )

    def solve_L(self, y, z, tol=1e-10):
        """Level ``L`` of the rescaled profile through ``(y, z)``.

        The forward residual ``|z - L phi(y/L)|`` is checked against ``tol``
        (relative to ``max(1, |z|)``).
        """
        pt = self.local(y, z)
        L = pt.L
        fwd = self.forward(L, np.asarray(y, dtype=np.float64))
        zz = np.broadcast_to(np.asarray(z, dtype=np.float64), np.shape(L))
        err = np.abs(fwd - zz)
        if np.any(err > tol * np.maximum(1.0, np.abs(zz))):
            raise DomainError(f"solve_L residual {np.max(err):.3e} above tolerance {tol}")
        return float(L) if np.ndim(L) == 0 else L

    def forward(self, L, y):
        """``L * phi(y / L)`` for ``|y| <= L``."""
        L = np.asarray(L, dtype=np.float64)
        r = np.clip(np.asarray(y, dtype=np.float64) / L, -1.0, 1.0)
        val = L * np.asarray(phi(self.params, r))
        return float(val) if np.ndim(val) == 0 else val

    # ----------------------------------------------------------- derivatives

    def _derivs(self, pt):
        """``(dL/dy, dL/dz)`` with ``D = s|psi'| - psi`` handled stably at both ends."""
        near_axis = pt.slope <= 1.0
        with np.errstate(invalid="ignore", divide="ignore"):
            D = pt.s * pt.slope - pt.psi
            dy_a = pt.slope / D
            dz_a = -1.0 / D
            Dp = pt.s - pt.psi * pt.inv_slope
            dy_e = 1.0 / Dp
            dz_e = -pt.inv_slope / Dp
        dy = np.where(near_axis, dy_a, dy_e) * pt.sign
        dz = np.where(near_axis, dz_a, dz_e)
        return dy, dz

    def grad_L(self, y, z):
        pt = self.local(y, z)
        dy, dz = self._derivs(pt)
        if np.ndim(dy) == 0:
            return float(dy), float(dz)
        return dy, dz

    def _second(self, pt):
        """``(L d2L/dy2, L d2L/dz2)``, from ``psi'' psi^2 / D^3`` and ``psi'' s^2 / D^3``."""
        lam = self.lam
        near_axis = pt.slope <= 1.0
        with np.errstate(invalid="ignore", divide="ignore"):
            d2 = curvature_factor_of_angle(lam, pt.theta) / (-pt.psi)
            D = pt.s * pt.slope - pt.psi
            ratio_a = d2 / D**3
            st = np.sin(pt.theta)
            ct = np.cos(pt.theta)
            # psi'' / |psi'|^3 written without the slope, finite at the cone edge
            d2p3 = (lam + st) ** 2 / (math.sqrt(lam * lam - 1.0) * ct**3 * (-pt.psi))
            ratio_e = d2p3 / (pt.s - pt.psi * pt.inv_slope) ** 3
        ratio = np.where(near_axis, ratio_a, ratio_e)
        return ratio * pt.psi**2, ratio * pt.s**2

    def hessian_terms(self, y, z):
        pt = self.local(y, z)
        return self._second(pt)

    def laplacian_L(self, y, z):
        pt = self.local(y, z)
        lyy, lzz = self._second(pt)
        with np.errstate(invalid="ignore", divide="ignore"):
            val = (lyy + lzz) / pt.L
        return float(val) if np.ndim(val) == 0 else val

    # ----------------------------------------------------------------- field

    def _q(self, pt):
        near_axis = pt.slope <= 1.0
        with np.errstate(invalid="ignore", divide="ignore"):
            n_a = np.sqrt(1.0 + pt.slope**2)
            q1_a = -pt.slope / n_a
            q2_a = 1.0 / n_a
            n_e = np.sqrt(1.0 + pt.inv_slope**2)
            q1_e = -1.0 / n_e
            q2_e = pt.inv_slope / n_e
        q1 = np.where(near_axis, q1_a, q1_e) * pt.sign
        q2 = np.where(near_axis, q2_a, q2_e)
        return q1, q2

    def q_field(self, y, z):
        """Unit normal ``(-phi_L', 1)/sqrt(1 + phi_L'^2)`` of the level curve."""
        pt = self.local(y, z)
        q1, q2 = self._q(pt)
        if np.ndim(q1) == 0:
            return float(q1), float(q2)
        return q1, q2

    def div_residual(self, y, z, h):
        """``|div(|z| q) + lam|`` by central differences with step ``h``."""
        y = np.asarray(y, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        for dy, dz in ((h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)):
            yy, zz = y + dy, z + dz
            if np.any(~((zz < 0.0) & (np.abs(yy) < zz * self.edge_slope()))):
                raise GeometryError("finite-difference stencil leaves the cone")
        q1p, _ = self.q_field(y + h, z)
        q1m, _ = self.q_field(y - h, z)
        _, q2p = self.q_field(y, z + h)
        _, q2m = self.q_field(y, z - h)
        div = (np.abs(z) * (np.asarray(q1p) - np.asarray(q1m))) / (2 * h) + (
            np.abs(z + h) * np.asarray(q2p) - np.abs(z - h) * np.asarray(q2m)
        ) / (2 * h)
        val = np.abs(div + self.lam)
        return float(val) if np.ndim(val) == 0 else val


# --------------------------------------------------------------------------
# constants of the Laplacian bound
# --------------------------------------------------------------------------


def _max_second_half(params, n=10_000):
    """Max of ``phi''`` on ``|y| <= 1/2``: dense sampling then 3-point refinement."""
    ys = np.linspace(0.0, 0.5, n + 1)
    vals = np.asarray(phi_second(params, ys))
    k = int(np.argmax(vals))
    best = float(vals[k])
    lo = ys[max(k - 1, 0)]
    hi = ys[min(k + 1, n)]
    for _ in range(3):
        fine = np.linspace(lo, hi, 21)
        fv = np.asarray(phi_second(params, fine))
        j = int(np.argmax(fv))
        best = max(best, float(fv[j]))
        step = fine[1] - fine[0]
        lo, hi = max(fine[j] - step, 0.0), min(fine[j] + step, 0.5)
    return best


def laplacian_constants(params):
    """``(C, C1, C2)``: bounds on ``|grad L|^2``, ``L d2L/dz2`` and ``L d2L/dy2``."""
    params = _as_params(params)
    lam, K = params.lam, params.K
    mK = -K
    C = 1.0 + ((lam - 1.0) / K) ** 2
    m2 = _max_second_half(params)
    tail = (1.0 / float(phi_prime(params, 0.5)) ** 2 + 1.0) ** 1.5
    C1 = max(0.25 * (lam / mK) ** 3 * m2, 2.0 * lam**2 / mK * tail)
    C2 = max(lam / mK * m2, 8.0 * (lam / (lam - 1.0)) ** 2 * mK * tail)
    return C, C1, C2
