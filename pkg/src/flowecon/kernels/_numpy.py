"""Vectorized numpy implementations of the batch kernels."""

import numpy as np

from ..core import N_MIN

EXECUTED, NO_GAIN, N_MIN_BREACH, COEFFICIENT = 0, 1, 2, 3


def product_pairs(p):
    iu, ju = np.triu_indices(p, k=1)
    return iu.astype(np.int64), ju.astype(np.int64)


def ces_derivatives(n, w, nu):
    a = (w * n) ** nu
    d = a.sum(axis=1)[:, None]
    g = nu * a / (n * d)
    h = -g[:, :, None] * g[:, None, :]
    k = np.arange(n.shape[1])
    h[:, k, k] += nu * (nu - 1.0) * a / (n * n * d)
    return g, h


def barter_choice(g, h, n, ia, ib, forced):
    """Best (or forced) product pair for each agent pair ``(ia[p], ib[p])``.

    ``forced[p] >= 0`` fixes the pair index (into ``product_pairs``) instead of
    maximizing. Returns ``(pi, pj, dni, dnj, gain, status, coef_fail)``.
    """
    m = ia.size
    iu, ju = product_pairs(n.shape[1])
    ga, gb = g[ia], g[ib]
    ha, hb = h[ia], h[ib]
    gi = ga[:, iu] + gb[:, iu]
    gj = ga[:, ju] + gb[:, ju]
    hii = ha[:, iu, iu] + hb[:, iu, iu]
    hjj = ha[:, ju, ju] + hb[:, ju, ju]
    hij = ha[:, iu, ju] + hb[:, iu, ju]
    bracket = (ga[:, iu] - gb[:, iu]) * gj - gi * (ga[:, ju] - gb[:, ju])
    q = hii * gj * gj + hjj * gi * gi - 2.0 * gi * gj * hij
    with np.errstate(divide="ignore", invalid="ignore"):
        L = np.where(q != 0, -gj / q, np.nan)
        gain = L * bracket * bracket / (4.0 * gj)
    valid = (L > 0) & (gain > 0)
    coef_fail = np.sum(~(L > 0), axis=1)

    rows = np.arange(m)
    masked = np.where(valid, gain, -np.inf)
    choice = np.argmax(masked, axis=1)
    has = valid[rows, choice]
    use_forced = forced >= 0
    choice = np.where(use_forced, forced, choice)
    has = np.where(use_forced, valid[rows, choice], has)
    coef_fail = np.where(use_forced, (~(L[rows, choice] > 0)).astype(np.int64), coef_fail)

    pi = iu[choice]
    pj = ju[choice]
    Lc = L[rows, choice]
    dni = np.where(has, Lc * bracket[rows, choice], 0.0)
    dnj = np.where(has, -(gi[rows, choice] / gj[rows, choice]) * dni, 0.0)
    gsel = np.where(has, gain[rows, choice], 0.0)

    status = np.full(m, NO_GAIN, dtype=np.int64)
    status[use_forced & ~(Lc > 0)] = COEFFICIENT
    breach = ((n[ia, pi] + dni < N_MIN) | (n[ia, pj] + dnj < N_MIN)
              | (n[ib, pi] - dni < N_MIN) | (n[ib, pj] - dnj < N_MIN))
    ok = has & (dni != 0)
    status[ok & ~breach] = EXECUTED
    status[ok & breach] = N_MIN_BREACH
    keep = status == EXECUTED
    dni = np.where(keep, dni, 0.0)
    dnj = np.where(keep, dnj, 0.0)
    gsel = np.where(keep, gsel, 0.0)
    pi = np.where(has, pi, -1)
    pj = np.where(has, pj, -1)
    return pi, pj, dni, dnj, gsel, status, coef_fail.astype(np.int64)


def metabolism_choice(g, h, n, proc_in, proc_rate, proc_out, allowed):
    """Best allowed process per agent.

    ``proc_in[m]`` holds up to two input indices (``-1`` for none), with matching
    ``proc_rate[m]``. Returns ``(choice, deltas, gain, status)``.
    """
    N, P = n.shape
    M = proc_out.size
    rows = np.arange(N)
    drive = g[:, proc_out].copy()
    curv = h[:, proc_out, proc_out].copy()
    for s in range(proc_in.shape[1]):
        ins = proc_in[:, s]
        present = ins >= 0
        safe = np.where(present, ins, 0)
        r = np.where(present, proc_rate[:, s], 0.0)
        drive -= r * g[:, safe]
        curv -= 2.0 * r * h[:, safe, proc_out]
        for t in range(proc_in.shape[1]):
            ins2 = proc_in[:, t]
            safe2 = np.where(ins2 >= 0, ins2, 0)
            r2 = np.where(ins2 >= 0, proc_rate[:, t], 0.0)
            curv += r * r2 * h[:, safe, safe2]
    with np.errstate(divide="ignore", invalid="ignore"):
        K = np.where(curv != 0, -1.0 / curv, np.nan)
    gain = 0.5 * K * drive * drive
    valid = allowed & (drive > 0) & (K > 0)
    masked = np.where(valid, gain, -np.inf)
    choice = np.argmax(masked, axis=1) if M else np.zeros(N, dtype=np.int64)
    has = valid[rows, choice] if M else np.zeros(N, dtype=bool)
    deltas = np.zeros((N, P))
    gsel = np.zeros(N)
    status = np.full(N, NO_GAIN, dtype=np.int64)
    if M == 0:
        return np.full(N, -1, dtype=np.int64), deltas, gsel, status
    dnk = np.where(has, K[rows, choice] * drive[rows, choice], 0.0)
    deltas[rows, proc_out[choice]] = dnk
    for s in range(proc_in.shape[1]):
        ins = proc_in[choice, s]
        present = has & (ins >= 0)
        deltas[rows[present], ins[present]] -= proc_rate[choice[present], s] * dnk[present]
    breach = np.any(n + deltas < N_MIN, axis=1)
    ok = has & (dnk != 0)
    status[ok & ~breach] = EXECUTED
    status[ok & breach] = N_MIN_BREACH
    keep = status == EXECUTED
    deltas[~keep] = 0.0
    gsel = np.where(keep, gain[rows, choice], 0.0)
    return np.where(has, choice, -1), deltas, gsel, status


def transport_j(g, h, i, j):
    gi, gj = g[:, i], g[:, j]
    den = 2.0 * gi * gj * h[:, i, j] - h[:, i, i] * gj * gj - h[:, j, j] * gi * gi
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den != 0, gj * gj / den, np.nan)
