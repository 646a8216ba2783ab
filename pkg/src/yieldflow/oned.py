"""Exact minimizer of the 1D volume-constrained problem.

Minimize ``int_{-1}^{1} |w'|^2/2 + A |w'|`` over ``w(+-1) = 0`` with
``int w = m``.  The minimizer is a parabola with a flat cap of half-width
``a = A / lam_A``, where the multiplier ``lam_A`` is the root of
``2 lam^3 - 3 lam^2 (A + m) + A^3`` on ``[A + m, inf)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError


def multiplier_cubic(lam, A, m):
    return 2.0 * lam**3 - 3.0 * lam**2 * (A + m) + A**3


def solve_lambda_A(A, m, tol=1e-12):
    """Root of the multiplier cubic on ``[A + m, inf)`` by bracketed bisection.

    The cubic is increasing on that half-line and non-positive at its left
    end, so doubling the bracket until a sign change and bisecting is safe.
    The cubic is homogeneous of degree three in ``(lam, A, m)``, so the stop
    test uses ``tol * min(1, (A + m)**3)``; small inputs then still get a
    root that is accurate in the relative sense.
    """
    A = float(A)
    m = float(m)
    if not A > 0.0:
        raise DomainError(f"A must be positive (got {A!r})")
    if not m >= 0.0:
        raise DomainError(f"m must be non-negative (got {m!r})")
    lo = A + m
    if multiplier_cubic(lo, A, m) >= 0.0:
        return lo
    scale = min(1.0, lo**3)
    width = max(lo, 1.0)
    hi = lo + width
    for _ in range(200):
        if multiplier_cubic(hi, A, m) > 0.0:
            break
        lo, hi = hi, hi + 2.0 * (hi - lo)
    else:
        raise ConvergenceError("bracket expansion for lambda_A failed")
    for it in range(400):
        mid = 0.5 * (lo + hi)
        r = multiplier_cubic(mid, A, m)
        if abs(r) <= tol * scale or mid in (lo, hi):
            return mid
        if r > 0.0:
            hi = mid
        else:
            lo = mid
    raise ConvergenceError("bisection for lambda_A did not converge", iterations=it, residual=r)


@dataclass(frozen=True)
class OneDSolution:
    A: float
    m: float
    lambda_A: float

    @property
    def a(self):
        """Half-width of the flat cap."""
        return self.A / self.lambda_A

    @property
    def plateau_height(self):
        a = self.a
        return self.A * (a - 1.0) ** 2 / (2.0 * a)


def solve_oned(A, m, tol=1e-12):
    return OneDSolution(A=float(A), m=float(m), lambda_A=solve_lambda_A(A, m, tol))


def _check_y(y):
    y = np.asarray(y, dtype=np.float64)
    if np.any(np.abs(y) > 1.0) or np.any(np.isnan(y)):
        raise DomainError("y must satisfy |y| <= 1")
    return y


def profile_w(sol, y):
    yy = _check_y(y)
    a, A = sol.a, sol.A
    ay = np.abs(yy)
    outer = A * (-(yy * yy) / (2.0 * a) + ay + 1.0 / (2.0 * a) - 1.0)
    val = np.where(ay <= a, sol.plateau_height, outer)
    return float(val) if np.ndim(y) == 0 else val


def subgradient_q(sol, y):
    """The selection ``q`` of ``sign(w')``: ``-y/a`` on the cap, ``-sign(y)`` outside."""
    yy = _check_y(y)
    a = sol.a
    val = np.where(np.abs(yy) <= a, -yy / a, -np.sign(yy))
    return float(val) if np.ndim(y) == 0 else val


def minimal_energy(sol):
    """Multiplier pairing ``m * lam_A``.

    Testing the Euler-Lagrange equation with ``w`` itself gives
    ``int |w'|^2 + A |w'| = lam_A * m``.  Note the full square: the minimum
    of the functional with ``|w'|^2/2`` is :func:`epsilon_min`, which is
    smaller by ``int |w'|^2 / 2``.
    """
    return sol.m * sol.lambda_A


def epsilon_min(sol):
    """Minimum value of ``int |w'|^2/2 + A |w'|`` under the volume constraint."""
    a = sol.a
    if a >= 1.0:
        return 0.0
    return sol.A**2 / a * ((1.0 - a) ** 3 / (3.0 * a) + (1.0 - a) ** 2)


def dirichlet_1d(sol):
    """``int |w'|^2`` of the closed-form profile."""
    a = sol.a
    return 2.0 * sol.A**2 * (1.0 - a) ** 3 / (3.0 * a * a)


def energy_1d(samples, A):
    """Quadrature of ``|w'|^2/2 + A|w'|`` for samples on a uniform grid of [-1, 1].

    One forward difference per cell, midpoint rule.
    """
    w = np.asarray(samples, dtype=np.float64)
    if w.ndim != 1 or w.size < 3:
        raise DomainError("need at least 3 samples")
    if w[0] != 0.0 or w[-1] != 0.0:
        raise DomainError("profile must vanish at y = +-1")
    h = 2.0 / (w.size - 1)
    d = np.diff(w) / h
    return float(h * np.sum(0.5 * d * d + A * np.abs(d)))


def volume_1d(samples):
    """Trapezoid volume of samples on a uniform grid of [-1, 1]."""
    w = np.asarray(samples, dtype=np.float64)
    h = 2.0 / (w.size - 1)
    return float(h * (w.sum() - 0.5 * (w[0] + w[-1])))
