"""Hot inner loops, numba-compiled by default.

Set ``SWITCHLAB_NO_NUMBA=1`` to select the pure-Python/numpy fallback
(same source, no compilation).  ``benchmarks/bench_kernels.py`` times
the two paths against each other.
"""

from __future__ import annotations

import math
import os

import numpy as np


def _planar_endpoint_impl(waits, i0, ux, uy, a, b, T, t0, logr0):
    """Advance the planar switched process through ``waits``.

    The state is a unit direction (ux, uy) plus an accumulated
    log-radius, so trajectories with positive exponent never overflow.
    Modes alternate starting from ``i0``; each segment applies the exact
    closed-form flow.  Stops at horizon ``T`` (applying the truncated
    final segment) or when the waits run out; the caller refills.

    Returns (ux, uy, logr, t, mode, waits_consumed).
    """
    t = t0
    logr = logr0
    mode = i0
    n = waits.shape[0]
    k = 0
    while k < n:
        w = waits[k]
        dt = w
        last = False
        if t + w >= T:
            dt = T - t
            last = True
        c = math.cos(dt)
        s = math.sin(dt)
        if mode == 0:
            x1 = c * ux + b * s * uy
            y1 = -s / b * ux + c * uy
        else:
            x1 = c * ux + s / b * uy
            y1 = -b * s * ux + c * uy
        nrm = math.sqrt(x1 * x1 + y1 * y1)
        logr += math.log(nrm) - a * dt
        ux = x1 / nrm
        uy = y1 / nrm
        if last:
            return ux, uy, logr, T, mode, k
        t += dt
        mode = 1 - mode
        k += 1
    return ux, uy, logr, t, mode, k


def _affine_chain_impl(waits0, waits1, V0, w0, Vi0, V1, w1, Vi1, b0, b1, y0):
    """Iterate the two-phase affine recursion Y -> phase0 -> phase1.

    Flow matrices come from the (complex) eigendecompositions
    A_i = V_i diag(w_i) V_i^{-1}; per step exp(tau A_i) is assembled
    from elementwise exponentials.  Returns the (n_steps, d) array of
    states observed after each completed pair of phases.
    """
    n = waits0.shape[0]
    d = y0.shape[0]
    out = np.empty((n, d))
    y = y0.astype(np.complex128)
    b0c = b0.astype(np.complex128)
    b1c = b1.astype(np.complex128)
    for i in range(n):
        m0 = (V0 * np.exp(waits0[i] * w0)) @ Vi0
        y = b0c + m0 @ (y - b0c)
        m1 = (V1 * np.exp(waits1[i] * w1)) @ Vi1
        y = b1c + m1 @ (y - b1c)
        for j in range(d):
            out[i, j] = y[j].real
            y[j] = out[i, j] + 0.0j
    return out


def _numba_enabled() -> bool:
    if os.environ.get("SWITCHLAB_NO_NUMBA", "").lower() in ("1", "true", "yes"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


if _numba_enabled():
    from numba import njit

    planar_endpoint = njit(cache=True)(_planar_endpoint_impl)
    affine_chain = njit(cache=True)(_affine_chain_impl)
    BACKEND = "numba"
else:
    planar_endpoint = _planar_endpoint_impl
    affine_chain = _affine_chain_impl
    BACKEND = "python"


def backend() -> str:
    """Which kernel path is active: 'numba' or 'python'."""
    return BACKEND
