"""Loop kernels compiled with numba; same contracts as ``_numpy``."""

import numpy as np
from numba import njit

from ..core import N_MIN

EXECUTED, NO_GAIN, N_MIN_BREACH, COEFFICIENT = 0, 1, 2, 3


@njit(cache=True, nogil=True)
def _ces_derivatives(n, w, nu, g, h):
    N, P = n.shape
    a = np.empty(P)
    for r in range(N):
        d = 0.0
        for k in range(P):
            a[k] = (w[r, k] * n[r, k]) ** nu
            d += a[k]
        for k in range(P):
            g[r, k] = nu * a[k] / (n[r, k] * d)
        for k in range(P):
            for l in range(P):
                h[r, k, l] = -g[r, k] * g[r, l]
            h[r, k, k] += nu * (nu - 1.0) * a[k] / (n[r, k] * n[r, k] * d)


def ces_derivatives(n, w, nu):
    N, P = n.shape
    g = np.empty((N, P))
    h = np.empty((N, P, P))
    _ces_derivatives(np.ascontiguousarray(n, dtype=np.float64),
                     np.ascontiguousarray(w, dtype=np.float64), float(nu), g, h)
    return g, h


@njit(cache=True, nogil=True)
def _barter_choice(g, h, n, ia, ib, forced, pi, pj, dni, dnj, gain, status, coef_fail):
    P = n.shape[1]
    for p in range(ia.size):
        a = ia[p]
        b = ib[p]
        best_i = -1
        best_j = -1
        best_gain = 0.0
        best_d = 0.0
        best_rate = 0.0
        fails = 0
        forced_fail = False
        idx = 0
        for i in range(P):
            for j in range(i + 1, P):
                if forced[p] >= 0 and idx != forced[p]:
                    idx += 1
                    continue
                gi = g[a, i] + g[b, i]
                gj = g[a, j] + g[b, j]
                hii = h[a, i, i] + h[b, i, i]
                hjj = h[a, j, j] + h[b, j, j]
                hij = h[a, i, j] + h[b, i, j]
                bracket = (g[a, i] - g[b, i]) * gj - gi * (g[a, j] - g[b, j])
                q = hii * gj * gj + hjj * gi * gi - 2.0 * gi * gj * hij
                L = -gj / q if q != 0.0 else np.nan
                gn = L * bracket * bracket / (4.0 * gj)
                if not L > 0.0:
                    fails += 1
                    if forced[p] >= 0:
                        forced_fail = True
                elif gn > 0.0 and (best_i < 0 or gn > best_gain):
                    best_i = i
                    best_j = j
                    best_gain = gn
                    best_d = L * bracket
                    best_rate = gi / gj
                idx += 1
        coef_fail[p] = fails
        pi[p] = best_i
        pj[p] = best_j
        dni[p] = 0.0
        dnj[p] = 0.0
        gain[p] = 0.0
        if best_i < 0 or best_d == 0.0:
            status[p] = COEFFICIENT if forced_fail else NO_GAIN
            continue
        di = best_d
        dj = -best_rate * di
        if (n[a, best_i] + di < N_MIN or n[a, best_j] + dj < N_MIN
                or n[b, best_i] - di < N_MIN or n[b, best_j] - dj < N_MIN):
            status[p] = N_MIN_BREACH
            continue
        status[p] = EXECUTED
        dni[p] = di
        dnj[p] = dj
        gain[p] = best_gain


def barter_choice(g, h, n, ia, ib, forced):
    m = ia.size
    pi = np.empty(m, dtype=np.int64)
    pj = np.empty(m, dtype=np.int64)
    dni = np.empty(m)
    dnj = np.empty(m)
    gain = np.empty(m)
    status = np.empty(m, dtype=np.int64)
    coef_fail = np.empty(m, dtype=np.int64)
    _barter_choice(g, h, n, np.asarray(ia, dtype=np.int64), np.asarray(ib, dtype=np.int64),
                   np.asarray(forced, dtype=np.int64), pi, pj, dni, dnj, gain, status, coef_fail)
    return pi, pj, dni, dnj, gain, status, coef_fail


@njit(cache=True, nogil=True)
def _metabolism_choice(g, h, n, proc_in, proc_rate, proc_out, allowed, choice, deltas, gain, status):
    N, P = n.shape
    M = proc_out.size
    S = proc_in.shape[1]
    for r in range(N):
        best = -1
        best_gain = 0.0
        best_dnk = 0.0
        for m in range(M):
            if not allowed[r, m]:
                continue
            k = proc_out[m]
            drive = g[r, k]
            curv = h[r, k, k]
            for s in range(S):
                x = proc_in[m, s]
                if x < 0:
                    continue
                rs = proc_rate[m, s]
                drive -= rs * g[r, x]
                curv -= 2.0 * rs * h[r, x, k]
                for t in range(S):
                    y = proc_in[m, t]
                    if y < 0:
                        continue
                    curv += rs * proc_rate[m, t] * h[r, x, y]
            K = -1.0 / curv if curv != 0.0 else np.nan
            gn = 0.5 * K * drive * drive
            if drive > 0.0 and K > 0.0 and (best < 0 or gn > best_gain):
                best = m
                best_gain = gn
                best_dnk = K * drive
        for k in range(P):
            deltas[r, k] = 0.0
        gain[r] = 0.0
        choice[r] = best
        if best < 0 or best_dnk == 0.0:
            status[r] = NO_GAIN
            continue
        deltas[r, proc_out[best]] = best_dnk
        for s in range(S):
            x = proc_in[best, s]
            if x >= 0:
                deltas[r, x] -= proc_rate[best, s] * best_dnk
        breach = False
        for k in range(P):
            if n[r, k] + deltas[r, k] < N_MIN:
                breach = True
        if breach:
            for k in range(P):
                deltas[r, k] = 0.0
            status[r] = N_MIN_BREACH
            continue
        status[r] = EXECUTED
        gain[r] = best_gain


def metabolism_choice(g, h, n, proc_in, proc_rate, proc_out, allowed):
    N, P = n.shape
    choice = np.empty(N, dtype=np.int64)
    deltas = np.empty((N, P))
    gain = np.empty(N)
    status = np.empty(N, dtype=np.int64)
    _metabolism_choice(g, h, n, np.asarray(proc_in, dtype=np.int64), np.asarray(proc_rate, dtype=np.float64),
                       np.asarray(proc_out, dtype=np.int64), np.asarray(allowed, dtype=np.bool_),
                       choice, deltas, gain, status)
    return choice, deltas, gain, status


@njit(cache=True, nogil=True)
def _transport_j(g, h, i, j, out):
    for r in range(g.shape[0]):
        gi = g[r, i]
        gj = g[r, j]
        den = 2.0 * gi * gj * h[r, i, j] - h[r, i, i] * gj * gj - h[r, j, j] * gi * gi
        out[r] = gj * gj / den if den != 0.0 else np.nan


def transport_j(g, h, i, j):
    out = np.empty(g.shape[0])
    _transport_j(g, h, int(i), int(j), out)
    return out
