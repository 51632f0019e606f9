"""Vectorized simulation kernels with a numba and a pure-numpy implementation.

Both implementations take the same uniform draws and return the same arrays;
they agree to floating-point rounding (the numpy path evaluates the normal
distribution through :mod:`scipy.special`, the numba path through the
``specialfn`` scalar kernels).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from ._accel import njit, resolve_backend
from .specialfn import _ndtr_upper, _ndtri, _truncnorm_ppf_std

# method codes shared by both backends
TWO_TRIALS = 0
HARMONIC = 1

_CEIL_SLACK = 1e-9


@njit
def _truncnorm_z1_numba(u, a, mean):
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        out[i] = mean + _truncnorm_ppf_std(a, math.inf, u[i])
    return out


def _truncnorm_z1_numpy(u, a, mean):
    # upper-tail form of the inverse cdf; mirrors specialfn._truncnorm_ppf_std
    u = np.asarray(u, dtype=float)
    if a > 0.0:
        sa = special.ndtr(-a)
        x = -special.ndtri(sa - u * sa)
    else:
        ca = special.ndtr(a)
        x = special.ndtri(ca + u * (1.0 - ca))
    x = np.where(x <= a, a + 1e-15 * max(1.0, abs(a)), x)
    return mean + x


@njit
def _normal_numba(u):
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        out[i] = _ndtri(u[i])
    return out


def _normal_numpy(u):
    return special.ndtri(u)


@njit
def _cell_numba(z1, e_int, e_rest, n1, delta2, z_power, shrinkage, fraction, method, w1, w2, c_h, z_alpha):
    n = z1.shape[0]
    target = np.empty(n)
    c = np.empty(n)
    n2 = np.empty(n, dtype=np.int64)
    n2i = np.empty(n, dtype=np.int64)
    z2i = np.empty(n)
    z2 = np.empty(n)
    significant = np.empty(n, dtype=np.bool_)
    power = np.empty(n)
    w = math.sqrt(w1) + math.sqrt(w2)
    for k in range(n):
        zk = z1[k]
        if method == HARMONIC:
            denom = w * w / c_h - w1 / (zk * zk)
            if denom <= 0.0:
                target[k] = np.nan
                c[k] = np.nan
                n2[k] = 0
                n2i[k] = 0
                z2i[k] = np.nan
                z2[k] = np.nan
                significant[k] = False
                power[k] = np.nan
                continue
            t = math.sqrt(w2) / math.sqrt(denom)
        else:
            t = z_alpha
        ck = (z_power + t) ** 2 / ((1.0 - shrinkage) ** 2 * zk * zk)
        nk = max(1, math.ceil(ck * n1 - _CEIL_SLACK))
        nik = int(math.floor(fraction * nk))
        if nik < 1:
            nik = 1
        if nik > nk - 1:
            nik = nk - 1
        f = nik / nk
        zi = delta2 * math.sqrt(nik) + e_int[k]
        zr = delta2 * math.sqrt(nk - nik) + e_rest[k]
        zf = math.sqrt(f) * zi + math.sqrt(1.0 - f) * zr
        # informed predictive power: pre-market estimate combined with interim data
        tau1 = zk * math.sqrt(2.0 / n1)
        tau2 = zi * math.sqrt(2.0 / nik)
        m = (n1 * tau1 + nik * tau2) / (n1 + nik)
        v = 2.0 / (n1 + nik)
        half_rest = 0.5 * (1.0 - f) * nk
        needed = (t - math.sqrt(f) * zi) / math.sqrt(1.0 - f)
        target[k] = t
        c[k] = ck
        n2[k] = nk
        n2i[k] = nik
        z2i[k] = zi
        z2[k] = zf
        significant[k] = zf >= t
        power[k] = _ndtr_upper((needed - m * math.sqrt(half_rest)) / math.sqrt(1.0 + v * half_rest))
    return target, c, n2, n2i, z2i, z2, significant, power


def _cell_numpy(z1, e_int, e_rest, n1, delta2, z_power, shrinkage, fraction, method, w1, w2, c_h, z_alpha):
    z1 = np.asarray(z1, dtype=float)
    if method == HARMONIC:
        w = math.sqrt(w1) + math.sqrt(w2)
        denom = w * w / c_h - w1 / (z1 * z1)
        ok = denom > 0.0
        t = np.where(ok, math.sqrt(w2) / np.sqrt(np.where(ok, denom, 1.0)), np.nan)
    else:
        ok = np.ones(z1.shape, dtype=bool)
        t = np.full(z1.shape, z_alpha)
    c = (z_power + t) ** 2 / ((1.0 - shrinkage) ** 2 * z1 * z1)
    n2 = np.maximum(1, np.ceil(np.where(ok, c, 1.0) * n1 - _CEIL_SLACK)).astype(np.int64)
    n2i = np.clip(np.floor(fraction * n2).astype(np.int64), 1, np.maximum(n2 - 1, 1))
    f = n2i / n2
    zi = delta2 * np.sqrt(n2i) + e_int
    zr = delta2 * np.sqrt(n2 - n2i) + e_rest
    zf = np.sqrt(f) * zi + np.sqrt(1.0 - f) * zr
    tau1 = z1 * math.sqrt(2.0 / n1)
    tau2 = zi * np.sqrt(2.0 / n2i)
    m = (n1 * tau1 + n2i * tau2) / (n1 + n2i)
    v = 2.0 / (n1 + n2i)
    half_rest = 0.5 * (1.0 - f) * n2
    needed = (t - np.sqrt(f) * zi) / np.sqrt(1.0 - f)
    power = special.ndtr(-((needed - m * np.sqrt(half_rest)) / np.sqrt(1.0 + v * half_rest)))
    n2 = np.where(ok, n2, 0)
    n2i = np.where(ok, n2i, 0)
    nan = np.nan
    return (
        t,
        np.where(ok, c, nan),
        n2,
        n2i,
        np.where(ok, zi, nan),
        np.where(ok, zf, nan),
        ok & (zf >= t),
        np.where(ok, power, nan),
    )


def truncnorm_z1(u, a, mean, backend=None):
    """``mean + TN(0, 1, a, inf)`` draws from uniforms in (0, 1)."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    if resolve_backend(backend) == "numba":
        return _truncnorm_z1_numba(u, float(a), float(mean))
    return _truncnorm_z1_numpy(u, float(a), float(mean))


def normal_from_uniform(u, backend=None):
    u = np.ascontiguousarray(u, dtype=np.float64)
    if resolve_backend(backend) == "numba":
        return _normal_numba(u)
    return _normal_numpy(u)


def simulate_cell(z1, e_int, e_rest, *, n1, delta2, z_power, shrinkage, fraction, method, w1, w2, c_h, z_alpha, backend=None):
    """Run one method over arrays of pre-market draws and standard normal noise.

    Returns the tuple ``(target_z, c, n2, n2i, z2i, z2, significant,
    interim_power)``. Rows where the harmonic necessary condition fails carry
    NaN and ``n2 == 0``.
    """
    args = (
        np.ascontiguousarray(z1, dtype=np.float64),
        np.ascontiguousarray(e_int, dtype=np.float64),
        np.ascontiguousarray(e_rest, dtype=np.float64),
        float(n1),
        float(delta2),
        float(z_power),
        float(shrinkage),
        float(fraction),
        int(method),
        float(w1),
        float(w2),
        float(c_h),
        float(z_alpha),
    )
    if resolve_backend(backend) == "numba":
        return _cell_numba(*args)
    return _cell_numpy(*args)
