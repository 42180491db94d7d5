"""Compiled inner loops for the coordinate-descent CE precoder.

The phases are carried as unit phasors ``x_i = exp(j theta_i)`` and the
per-user residual ``r_k = sum_i G[k, i] x_i - t_k`` (``G = H / sqrt(N)``) is
updated incrementally, so one sub-iteration costs O(M).
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _objective(r):
    g = 0.0
    for k in range(r.shape[0]):
        g += r[k].real * r[k].real + r[k].imag * r[k].imag
    return g


@njit(cache=True, nogil=True)
def ce_descent(G, target, x, max_outer, tol, trace):
    """Cyclic exact coordinate descent on ``g = sum_k |r_k|^2``.

    ``x`` is updated in place. When ``trace`` is non-empty it receives the
    objective after each sub-iteration (length ``max_outer * N``).

    Returns ``(r, g, outer_used, trace_len)``.
    """
    M, N = G.shape
    r = np.empty(M, dtype=np.complex128)
    for k in range(M):
        acc = 0j
        for i in range(N):
            acc += G[k, i] * x[i]
        r[k] = acc - target[k]
    g = _objective(r)
    record = trace.shape[0] > 0
    n_trace = 0
    outer = 0
    for _ in range(max_outer):
        outer += 1
        g_start = g
        for q in range(N):
            xq = x[q]
            # a = sum_k conj(G[k, q]) * (r_k - G[k, q] x_q)
            ar = 0.0
            ai = 0.0
            for k in range(M):
                gkq = G[k, q]
                e = r[k] - gkq * xq
                ar += gkq.real * e.real + gkq.imag * e.imag
                ai += gkq.real * e.imag - gkq.imag * e.real
            if ar != 0.0 or ai != 0.0:
                m = math.hypot(ar, ai)
                nx = complex(-ar / m, -ai / m)
                d = nx - xq
                g_new = 0.0
                for k in range(M):
                    v = r[k] + G[k, q] * d
                    g_new += v.real * v.real + v.imag * v.imag
                # guard against round-off pushing the objective up
                if g_new <= g:
                    for k in range(M):
                        r[k] += G[k, q] * d
                    x[q] = nx
                    g = g_new
            if record:
                trace[n_trace] = g
                n_trace += 1
        if g_start - g < tol:
            break
    return r, g, outer, n_trace


@njit(cache=True, nogil=True)
def mui_moments(G, raw, sqrt_energies, max_outer, tol, mean_out, sq_out):
    """Per-user residual energy statistics for one channel.

    For every row ``e`` of ``sqrt_energies`` (shape (n_e, M)) and every
    symbol row of ``raw`` (shape (S, M)), precode the target
    ``sqrt_energies[e] * raw[s]`` from the all-zero start and accumulate
    ``|r_k|^2``. Writes the mean and the mean of squares over symbols.
    """
    M, N = G.shape
    S = raw.shape[0]
    n_e = sqrt_energies.shape[0]
    target = np.empty(M, dtype=np.complex128)
    x = np.empty(N, dtype=np.complex128)
    empty = np.empty(0)
    for e in range(n_e):
        for k in range(M):
            mean_out[e, k] = 0.0
            sq_out[e, k] = 0.0
        for s in range(S):
            for k in range(M):
                target[k] = sqrt_energies[e, k] * raw[s, k]
            for i in range(N):
                x[i] = 1.0 + 0j
            r, g, outer, n_trace = ce_descent(G, target, x, max_outer, tol, empty)
            for k in range(M):
                p = r[k].real * r[k].real + r[k].imag * r[k].imag
                mean_out[e, k] += p
                sq_out[e, k] += p * p
        for k in range(M):
            mean_out[e, k] /= S
            sq_out[e, k] /= S
