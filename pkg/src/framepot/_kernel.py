"""Compiled inner loop of the greedy descent.

Each proposal consumes one row of pre-drawn uniforms ``u`` in [0, 1):
``k = floor(u0 m)``, ``l = floor(u1 n)``, ``z = (2 u2 - 1) + i (2 u3 - 1)``
(the imaginary part only for complex configurations).
"""

import numpy as np
from numba import njit

CHUNK_EXHAUSTED = 0
STEP_FLOOR = 1
BUDGET = 2

# indices into the float / int state vectors
F_CUR, F_DELTA, F_BEST = 0, 1, 2
I_PROPS, I_ACCEPTS, I_WIN_ACC, I_WIN_CNT, I_SINCE_REFRESH = 0, 1, 2, 3, 4


@njit(cache=True, nogil=True)
def pair_powers(V, p):
    m, n = V.shape
    half = 0.5 * p
    P = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            s = 0j
            for t in range(n):
                s += V[i, t] * np.conj(V[j, t])
            a2 = s.real * s.real + s.imag * s.imag
            val = a2 if p == 2.0 else a2**half
            P[i, j] = val
            P[j, i] = val
    return P


@njit(cache=True, nogil=True)
def upper_sum(P):
    m = P.shape[0]
    total = 0.0
    for i in range(m):
        for j in range(i + 1, m):
            total += P[i, j]
    return total


@njit(cache=True, nogil=True)
def run_chunk(
    V, P, draws, is_complex, p, fstate, istate,
    budget, min_step, window, acc_high, acc_low, step_up, step_down,
    refresh_every, trace, record_trace,
):
    """Advance the descent over ``draws``; mutates ``V``, ``P`` and the states.

    Returns ``(status, rows_used, trace_rows)``.
    """
    m, n = V.shape
    half = 0.5 * p
    w = np.empty(n, np.complex128)
    newp = np.empty(m)
    ntrace = 0
    rows = draws.shape[0]
    r = 0
    while True:
        if fstate[F_DELTA] < min_step:
            return STEP_FLOOR, r, ntrace
        if istate[I_PROPS] >= budget:
            return BUDGET, r, ntrace
        if r >= rows:
            return CHUNK_EXHAUSTED, r, ntrace
        k = int(draws[r, 0] * m)
        if k >= m:
            k = m - 1
        l = int(draws[r, 1] * n)
        if l >= n:
            l = n - 1
        zr = 2.0 * draws[r, 2] - 1.0
        zi = 2.0 * draws[r, 3] - 1.0 if is_complex else 0.0
        r += 1
        delta = fstate[F_DELTA]
        for t in range(n):
            w[t] = V[k, t]
        w[l] += complex(delta * zr, delta * zi)
        nrm2 = 0.0
        for t in range(n):
            nrm2 += w[t].real * w[t].real + w[t].imag * w[t].imag
        istate[I_PROPS] += 1
        istate[I_WIN_CNT] += 1
        nrm = np.sqrt(nrm2)
        if nrm > 1e-300:
            for t in range(n):
                w[t] = w[t] / nrm
            d = 0.0
            for j in range(m):
                if j == k:
                    continue
                s = 0j
                for t in range(n):
                    s += w[t] * np.conj(V[j, t])
                a2 = s.real * s.real + s.imag * s.imag
                newp[j] = a2 if p == 2.0 else a2**half
                d += newp[j] - P[k, j]
            if d < 0.0:
                for t in range(n):
                    V[k, t] = w[t]
                for j in range(m):
                    if j != k:
                        P[k, j] = newp[j]
                        P[j, k] = newp[j]
                fstate[F_CUR] += d
                istate[I_ACCEPTS] += 1
                istate[I_WIN_ACC] += 1
                istate[I_SINCE_REFRESH] += 1
                if istate[I_SINCE_REFRESH] >= refresh_every:
                    P[:, :] = pair_powers(V, p)
                    fstate[F_CUR] = upper_sum(P)
                    istate[I_SINCE_REFRESH] = 0
                if fstate[F_CUR] < fstate[F_BEST]:
                    fstate[F_BEST] = fstate[F_CUR]
        if istate[I_WIN_CNT] >= window:
            rate = istate[I_WIN_ACC] / istate[I_WIN_CNT]
            if rate > acc_high:
                fstate[F_DELTA] *= step_up
            elif rate < acc_low:
                fstate[F_DELTA] *= step_down
            istate[I_WIN_CNT] = 0
            istate[I_WIN_ACC] = 0
            if record_trace:
                trace[ntrace, 0] = istate[I_PROPS]
                trace[ntrace, 1] = fstate[F_BEST]
                trace[ntrace, 2] = fstate[F_DELTA]
                ntrace += 1
