"""Compiled inner loops for the learning dynamics.

The public ``step_*`` functions and the trajectory runner both call
:func:`step_into`, so a single step computed either way is bitwise identical.
Games are passed as plain arrays plus an integer ``kind`` (0 multilinear
tensor, 1 Team-WGAN polynomial) so that the kernels can be cached on disk.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .games.core import multilinear_gradient_into
from .geometry import _project_blocks_into

GDA, OGDA, EG, OMWU, KPV = 0, 1, 2, 3, 4
METHOD_CODES = {"GDA": GDA, "OGDA": OGDA, "EG": EG, "OMWU": OMWU, "KPV": KPV}

MULTILINEAR, WGAN = 0, 1

RUNNING, STABILIZED, NONFINITE = 0, 1, 2


@njit(cache=True, nogil=True)
def _wgan_gradient_into(mu, pdiff, z, out):
    n = mu.shape[0]
    p = z[n]
    vt = 0.0
    for i in range(n):
        vt += z[n + 1 + i] * z[i]
    for i in range(n):
        th = z[i]
        v = z[n + 1 + i]
        w = z[2 * n + 1 + i]
        out[i] = (1.0 - 2.0 * p) * v - 2.0 * w * th
        out[n + 1 + i] = pdiff * mu[i] + (1.0 - 2.0 * p) * th
        out[2 * n + 1 + i] = mu[i] * mu[i] - th * th
    out[n] = -2.0 * vt


@njit(cache=True, nogil=True)
def field_into(kind, payoff, counts, offsets, sign, mu, pdiff, z, out):
    """Signed field ``F = sign * grad U`` written into ``out``."""
    if kind == MULTILINEAR:
        multilinear_gradient_into(payoff, counts, offsets, z, out)
    else:
        _wgan_gradient_into(mu, pdiff, z, out)
    for i in range(z.shape[0]):
        out[i] *= sign[i]


@njit(cache=True, nogil=True)
def _project(constrained, offsets, raw, out):
    if constrained:
        _project_blocks_into(raw, offsets, out)
    else:
        out[:] = raw


@njit(cache=True, nogil=True)
def omwu_log_update(logw, f, prev, eta, offsets, logw_out, z_out):
    """Optimistic multiplicative step carried out on log-weights.

    Each block is shifted by its maximum before exponentiating, so the
    largest weight is exactly ``exp(0) = 1`` and nothing overflows.
    """
    for b in range(offsets.shape[0] - 1):
        lo = offsets[b]
        hi = offsets[b + 1]
        top = -np.inf
        for i in range(lo, hi):
            logw_out[i] = logw[i] + eta * (2.0 * f[i] - prev[i])
            if logw_out[i] > top:
                top = logw_out[i]
        total = 0.0
        for i in range(lo, hi):
            logw_out[i] -= top
            z_out[i] = np.exp(logw_out[i])
            total += z_out[i]
        shift = np.log(total)
        for i in range(lo, hi):
            z_out[i] /= total
            logw_out[i] -= shift


@njit(cache=True, nogil=True)
def step_into(
    method, kind, payoff, counts, offsets, sign, mu, pdiff, constrained, eta, k, p,
    z, prev, theta, z_out, prev_out, theta_out, f, g, h,
):
    """One step of ``method`` from ``(z, prev, theta)`` into the ``*_out`` arrays.

    ``prev`` is the previous signed field (OGDA, OMWU) and ``theta`` the
    tracking estimate (KPV); unused arrays are left untouched. For OMWU the
    log-weights are recomputed from ``z``; the runner carries them instead.
    """
    d = z.shape[0]
    field_into(kind, payoff, counts, offsets, sign, mu, pdiff, z, f)
    if method == GDA:
        for i in range(d):
            g[i] = z[i] + eta * f[i]
        _project(constrained, offsets, g, z_out)
    elif method == OGDA:
        for i in range(d):
            g[i] = z[i] + eta * (2.0 * f[i] - prev[i])
            prev_out[i] = f[i]
        _project(constrained, offsets, g, z_out)
    elif method == EG:
        for i in range(d):
            g[i] = z[i] + eta * f[i]
        _project(constrained, offsets, g, h)
        field_into(kind, payoff, counts, offsets, sign, mu, pdiff, h, g)
        for i in range(d):
            g[i] = z[i] + eta * g[i]
        _project(constrained, offsets, g, z_out)
    elif method == OMWU:
        for i in range(d):
            h[i] = np.log(z[i])
        omwu_log_update(h, f, prev, eta, offsets, g, z_out)
        for i in range(d):
            prev_out[i] = f[i]
    else:
        for i in range(d):
            g[i] = z[i] + eta * f[i] + eta * k * (z[i] - theta[i])
            h[i] = theta[i] + eta * p * (z[i] - theta[i])
        _project(constrained, offsets, g, z_out)
        _project(constrained, offsets, h, theta_out)


@njit(cache=True, nogil=True)
def run_into(
    method, kind, payoff, counts, offsets, sign, mu, pdiff, constrained, eta, k, p,
    z, prev, theta, max_iters, tol, patience, stride, rec_steps, rec_z, rec_avg,
):
    """Iterate ``method`` in place, sampling every ``stride`` steps.

    Returns ``(steps_done, status, n_records)``. ``rec_*`` must have room for
    ``max_iters // stride + 2`` rows. Row 0 holds the initial point.
    """
    d = z.shape[0]
    f = np.empty(d)
    g = np.empty(d)
    h = np.empty(d)
    zn = np.empty(d)
    pn = prev.copy()
    tn = theta.copy()
    avg = z.copy()
    logw = np.empty(d)
    logn = np.empty(d)
    if method == OMWU:
        for i in range(d):
            logw[i] = np.log(z[i])
    rec_steps[0] = 0
    rec_z[0] = z
    rec_avg[0] = avg
    n_rec = 1
    still = 0
    status = RUNNING
    t = 0
    while t < max_iters:
        if method == OMWU:
            field_into(kind, payoff, counts, offsets, sign, mu, pdiff, z, f)
            omwu_log_update(logw, f, prev, eta, offsets, logn, zn)
            for i in range(d):
                pn[i] = f[i]
        else:
            step_into(
                method, kind, payoff, counts, offsets, sign, mu, pdiff, constrained, eta, k, p,
                z, prev, theta, zn, pn, tn, f, g, h,
            )
        t += 1
        disp = 0.0
        finite = True
        for i in range(d):
            if not np.isfinite(zn[i]):
                finite = False
            delta = abs(zn[i] - z[i])
            if delta > disp:
                disp = delta
            if method == KPV:
                if not np.isfinite(tn[i]):
                    finite = False
                delta = abs(tn[i] - theta[i])
                if delta > disp:
                    disp = delta
        if not finite:
            status = NONFINITE
            break
        z[:] = zn
        prev[:] = pn
        theta[:] = tn
        if method == OMWU:
            logw[:] = logn
        for i in range(d):
            avg[i] += (z[i] - avg[i]) / t
        if disp < tol:
            still += 1
        else:
            still = 0
        if still >= patience:
            status = STABILIZED
        if t % stride == 0 or status != RUNNING or t == max_iters:
            rec_steps[n_rec] = t
            rec_z[n_rec] = z
            rec_avg[n_rec] = avg
            n_rec += 1
        if status != RUNNING:
            break
    return t, status, n_rec
