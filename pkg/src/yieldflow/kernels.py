"""Hot numeric kernels, each in a numba flavour and a numpy flavour.

The public names (``f_angle_inverse``, ``cone_angles``, ``edge_coefficients``,
``corner_energy``) are bound to one flavour at import time according to
:data:`yieldflow._accel.USE_NUMBA`.  Both flavours stay importable under the
``*_numba`` / ``*_numpy`` suffixes so tests and the benchmark can compare them.

Angle variable
--------------
The yield-profile function is evaluated through the angle
``theta = arcsin((lam**2 - 1) * Z - lam)``, in which

    f(theta) = (theta - lam * cos(theta)) / (lam**2 - 1) ** 1.5

is analytic and monotone on ``[-arcsin(1/lam), pi/2]``.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, njit

_NEWTON_ITERS = 100


# --------------------------------------------------------------------------
# inverse of f in the angle variable
# --------------------------------------------------------------------------


def _f_inverse_scalar(v, lam):
    d = (lam * lam - 1.0) ** 1.5
    lo = -math.asin(1.0 / lam)
    hi = 0.5 * math.pi
    target = v * d
    glo = lo - lam * math.cos(lo) - target
    ghi = hi - target
    if glo >= 0.0:
        return lo
    if ghi <= 0.0:
        return hi
    # start from the chord estimate
    t = lo + (hi - lo) * (-glo) / (ghi - glo)
    for _ in range(_NEWTON_ITERS):
        g = t - lam * math.cos(t) - target
        if g > 0.0:
            hi = t
        elif g < 0.0:
            lo = t
        else:
            return t
        dg = 1.0 + lam * math.sin(t)
        step_ok = False
        if dg > 0.0:
            tn = t - g / dg
            if lo < tn < hi:
                step_ok = True
        if not step_ok:
            tn = 0.5 * (lo + hi)
        if abs(tn - t) <= 4e-16 * max(1.0, abs(t)) or hi - lo <= 4e-16:
            return tn
        t = tn
    return t


_f_inverse_scalar_jit = njit(_f_inverse_scalar)


@njit
def _f_angle_inverse_loop(v, lam, out):
    for i in range(v.size):
        out[i] = _f_inverse_scalar_jit(v[i], lam)
    return out


def f_angle_inverse_numba(v, lam):
    v = np.ascontiguousarray(v, dtype=np.float64)
    out = np.empty(v.size)
    _f_angle_inverse_loop(v.ravel(), float(lam), out)
    return out.reshape(v.shape)


def f_angle_inverse_numpy(v, lam):
    v = np.asarray(v, dtype=np.float64)
    d = (lam * lam - 1.0) ** 1.5
    target = v * d
    lo = np.full(v.shape, -math.asin(1.0 / lam))
    hi = np.full(v.shape, 0.5 * math.pi)
    glo = lo - lam * np.cos(lo) - target
    ghi = hi - target
    t = lo + (hi - lo) * np.clip(-glo / (ghi - glo), 0.0, 1.0)
    done = (glo >= 0.0) | (ghi <= 0.0)
    t = np.where(glo >= 0.0, lo, np.where(ghi <= 0.0, hi, t))
    for _ in range(_NEWTON_ITERS):
        if done.all():
            break
        g = t - lam * np.cos(t) - target
        hi = np.where(g > 0.0, t, hi)
        lo = np.where(g < 0.0, t, lo)
        dg = 1.0 + lam * np.sin(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            tn = t - g / dg
        ok = (dg > 0.0) & (tn > lo) & (tn < hi)
        tn = np.where(ok, tn, 0.5 * (lo + hi))
        tn = np.where(g == 0.0, t, tn)
        conv = (np.abs(tn - t) <= 4e-16 * np.maximum(1.0, np.abs(t))) | (hi - lo <= 4e-16)
        t = np.where(done, t, tn)
        done = done | conv
    return t


# --------------------------------------------------------------------------
# inverse of the cone chart: (y, z) -> angle of the level curve through it
# --------------------------------------------------------------------------


def _cone_angle_scalar(y, z, lam, kk):
    ay = abs(y)
    if ay == 0.0:
        return 0.5 * math.pi
    d = (lam * lam - 1.0) ** 1.5
    c = lam * lam - 1.0
    ftop = 0.5 * math.pi / d
    lo = -math.asin(1.0 / lam)
    hi = 0.5 * math.pi
    # G(theta) = z * s(theta) - K * Z(theta) * |y| is increasing in theta
    s_lo = -kk * (ftop - (lo - lam * math.cos(lo)) / d)
    g_lo = z * s_lo - kk * ((math.sin(lo) + lam) / c) * ay
    if g_lo > 0.0:
        return math.nan
    if g_lo == 0.0:
        return lo
    g_hi = -kk * ((1.0 + lam) / c) * ay  # s(pi/2) = 0
    t = lo + (hi - lo) * (-g_lo) / (g_hi - g_lo)
    for _ in range(_NEWTON_ITERS):
        st = math.sin(t)
        ct = math.cos(t)
        g = z * (-kk) * (ftop - (t - lam * ct) / d) - kk * ((st + lam) / c) * ay
        if g > 0.0:
            hi = t
        elif g < 0.0:
            lo = t
        else:
            return t
        dg = z * kk * (1.0 + lam * st) / d - kk * ct / c * ay
        tn = 0.5 * (lo + hi)
        if dg > 0.0:
            cand = t - g / dg
            if lo < cand < hi:
                tn = cand
        if abs(tn - t) <= 4e-16 * max(1.0, abs(t)) or hi - lo <= 4e-16:
            return tn
        t = tn
    return t


_cone_angle_scalar_jit = njit(_cone_angle_scalar)


@njit
def _cone_angles_loop(y, z, lam, kk, out):
    for i in range(y.size):
        out[i] = _cone_angle_scalar_jit(y[i], z[i], lam, kk)
    return out


def cone_angles_numba(y, z, lam, kk):
    y, z = np.broadcast_arrays(np.asarray(y, dtype=np.float64), np.asarray(z, dtype=np.float64))
    shape = y.shape
    yy = np.ascontiguousarray(y).ravel()
    zz = np.ascontiguousarray(z).ravel()
    out = np.empty(yy.size)
    _cone_angles_loop(yy, zz, float(lam), float(kk), out)
    return out.reshape(shape)


def cone_angles_numpy(y, z, lam, kk):
    y, z = np.broadcast_arrays(np.asarray(y, dtype=np.float64), np.asarray(z, dtype=np.float64))
    ay = np.abs(y)
    d = (lam * lam - 1.0) ** 1.5
    c = lam * lam - 1.0
    ftop = 0.5 * math.pi / d

    def g_of(t):
        s = -kk * (ftop - (t - lam * np.cos(t)) / d)
        return z * s - kk * ((np.sin(t) + lam) / c) * ay

    t_min = -math.asin(1.0 / lam)
    lo = np.full(y.shape, t_min)
    hi = np.full(y.shape, 0.5 * math.pi)
    g_lo = g_of(lo)
    g_hi = g_of(hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = lo + (hi - lo) * np.clip(-g_lo / (g_hi - g_lo), 0.0, 1.0)
    t = np.nan_to_num(t, nan=0.5 * (t_min + 0.5 * math.pi))
    done = (g_lo >= 0.0) | (ay == 0.0)
    for _ in range(_NEWTON_ITERS):
        if done.all():
            break
        g = g_of(t)
        hi = np.where(g > 0.0, t, hi)
        lo = np.where(g < 0.0, t, lo)
        dg = z * kk * (1.0 + lam * np.sin(t)) / d - kk * np.cos(t) / c * ay
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = t - g / dg
        ok = (dg > 0.0) & (cand > lo) & (cand < hi)
        tn = np.where(ok, cand, 0.5 * (lo + hi))
        tn = np.where(g == 0.0, t, tn)
        conv = (np.abs(tn - t) <= 4e-16 * np.maximum(1.0, np.abs(t))) | (hi - lo <= 4e-16) | (g == 0.0)
        t = np.where(done, t, tn)
        done = done | conv
    t = np.where(g_lo == 0.0, t_min, t)
    t = np.where(g_lo > 0.0, np.nan, t)
    return np.where(ay == 0.0, 0.5 * math.pi, t)


# --------------------------------------------------------------------------
# regularized energy on the four-corner triangulation
# --------------------------------------------------------------------------
#
# Each grid cell is split both ways into two right triangles and the two
# triangulations are averaged, so every cell carries four corner-anchored
# one-sided gradients.  ``zc`` holds |z| at cell centres, one value per
# z-cell.


@njit
def _edge_coefficients_loop(u, hy, hz, zc, eps, cy, cz):
    ny, nz = u.shape
    fy = hz / (4.0 * hy)
    fz = hy / (4.0 * hz)
    e2 = eps * eps
    for i in range(ny):
        for j in range(nz):
            if i < ny - 1:
                cy[i, j] = 0.0
            if j < nz - 1:
                cz[i, j] = 0.0
    for i in range(ny - 1):
        for j in range(nz - 1):
            dyb = (u[i + 1, j] - u[i, j]) / hy
            dyt = (u[i + 1, j + 1] - u[i, j + 1]) / hy
            dzl = (u[i, j + 1] - u[i, j]) / hz
            dzr = (u[i + 1, j + 1] - u[i + 1, j]) / hz
            a = zc[j]
            w_ll = 1.0 + a / math.sqrt(e2 + dyb * dyb + dzl * dzl)
            w_lr = 1.0 + a / math.sqrt(e2 + dyb * dyb + dzr * dzr)
            w_ul = 1.0 + a / math.sqrt(e2 + dyt * dyt + dzl * dzl)
            w_ur = 1.0 + a / math.sqrt(e2 + dyt * dyt + dzr * dzr)
            cy[i, j] += fy * (w_ll + w_lr)
            cy[i, j + 1] += fy * (w_ul + w_ur)
            cz[i, j] += fz * (w_ll + w_ul)
            cz[i + 1, j] += fz * (w_lr + w_ur)


def edge_coefficients_numba(u, hy, hz, zc, eps):
    u = np.ascontiguousarray(u, dtype=np.float64)
    ny, nz = u.shape
    cy = np.empty((ny - 1, nz))
    cz = np.empty((ny, nz - 1))
    _edge_coefficients_loop(u, float(hy), float(hz), np.ascontiguousarray(zc, dtype=np.float64), float(eps), cy, cz)
    return cy, cz


def _corner_diffs(u, hy, hz):
    dyb = (u[1:, :-1] - u[:-1, :-1]) / hy
    dyt = (u[1:, 1:] - u[:-1, 1:]) / hy
    dzl = (u[:-1, 1:] - u[:-1, :-1]) / hz
    dzr = (u[1:, 1:] - u[1:, :-1]) / hz
    return dyb, dyt, dzl, dzr


def edge_coefficients_numpy(u, hy, hz, zc, eps):
    u = np.asarray(u, dtype=np.float64)
    dyb, dyt, dzl, dzr = _corner_diffs(u, hy, hz)
    a = np.asarray(zc)[None, :]
    e2 = eps * eps
    w_ll = 1.0 + a / np.sqrt(e2 + dyb * dyb + dzl * dzl)
    w_lr = 1.0 + a / np.sqrt(e2 + dyb * dyb + dzr * dzr)
    w_ul = 1.0 + a / np.sqrt(e2 + dyt * dyt + dzl * dzl)
    w_ur = 1.0 + a / np.sqrt(e2 + dyt * dyt + dzr * dzr)
    ny, nz = u.shape
    fy = hz / (4.0 * hy)
    fz = hy / (4.0 * hz)
    cy = np.zeros((ny - 1, nz))
    cz = np.zeros((ny, nz - 1))
    cy[:, :-1] += fy * (w_ll + w_lr)
    cy[:, 1:] += fy * (w_ul + w_ur)
    cz[:-1, :] += fz * (w_ll + w_ul)
    cz[1:, :] += fz * (w_lr + w_ur)
    return cy, cz


@njit
def _corner_energy_loop(u, hy, hz, zc, eps):
    ny, nz = u.shape
    e2 = eps * eps
    total = 0.0
    for i in range(ny - 1):
        row = 0.0
        for j in range(nz - 1):
            dyb = (u[i + 1, j] - u[i, j]) / hy
            dyt = (u[i + 1, j + 1] - u[i, j + 1]) / hy
            dzl = (u[i, j + 1] - u[i, j]) / hz
            dzr = (u[i + 1, j + 1] - u[i + 1, j]) / hz
            a = zc[j]
            g = dyb * dyb + dzl * dzl
            row += 0.5 * g + a * math.sqrt(e2 + g)
            g = dyb * dyb + dzr * dzr
            row += 0.5 * g + a * math.sqrt(e2 + g)
            g = dyt * dyt + dzl * dzl
            row += 0.5 * g + a * math.sqrt(e2 + g)
            g = dyt * dyt + dzr * dzr
            row += 0.5 * g + a * math.sqrt(e2 + g)
        total += row
    return total * hy * hz * 0.25


def corner_energy_numba(u, hy, hz, zc, eps):
    return float(
        _corner_energy_loop(
            np.ascontiguousarray(u, dtype=np.float64),
            float(hy),
            float(hz),
            np.ascontiguousarray(zc, dtype=np.float64),
            float(eps),
        )
    )


def corner_energy_numpy(u, hy, hz, zc, eps):
    u = np.asarray(u, dtype=np.float64)
    dyb, dyt, dzl, dzr = _corner_diffs(u, hy, hz)
    a = np.asarray(zc)[None, :]
    e2 = eps * eps
    total = 0.0
    for gy, gz in ((dyb, dzl), (dyb, dzr), (dyt, dzl), (dyt, dzr)):
        g = gy * gy + gz * gz
        total += float(np.sum(0.5 * g + a * np.sqrt(e2 + g)))
    return total * hy * hz * 0.25


if USE_NUMBA:
    f_angle_inverse = f_angle_inverse_numba
    cone_angles = cone_angles_numba
    edge_coefficients = edge_coefficients_numba
    corner_energy = corner_energy_numba
else:
    f_angle_inverse = f_angle_inverse_numpy
    cone_angles = cone_angles_numpy
    edge_coefficients = edge_coefficients_numpy
    corner_energy = corner_energy_numpy
