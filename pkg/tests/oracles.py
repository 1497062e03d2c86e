"""Brute-force reference solutions built only from the exact satisfaction index.

None of these use the linearized flow formulas; they maximize the exact
change in satisfaction numerically (dense grid, then bounded refinement).
"""

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from flowecon.utility import evaluate


def _argmax_1d(f, lo, hi, grid=2001):
    """Maximize ``f`` on ``[lo, hi]``; ``f`` maps an array of points to values."""
    xs = np.linspace(lo, hi, grid)
    vals = f(xs)
    k = int(np.nanargmax(vals))
    a, b = xs[max(k - 1, 0)], xs[min(k + 1, grid - 1)]
    res = minimize_scalar(lambda x: -f(np.array([x]))[0], bounds=(a, b), method="bounded",
                          options={"xatol": 1e-15 * max(1.0, abs(b))})
    return float(res.x), float(-res.fun)


def _moved(n, d, coeffs):
    """Inventories ``n + d * coeffs`` for every ``d`` in the array ``d``."""
    return n[None, :] + np.asarray(d, dtype=float)[:, None] * coeffs[None, :]


def _safe_gain(idx, m, ww, base):
    out = np.full(m.shape[0], -np.inf)
    ok = np.all(m > 0, axis=1)
    if np.any(ok):
        out[ok] = evaluate(idx, m[ok], ww) - base
    return out


def _ref(ww, p):
    # evaluate() takes a WWMatrix for single points; batches need the reference vector
    return None if ww is None else np.broadcast_to(ww.reference, (1, p))


def fixed_rate_oracle(idx, n, ww, i, j, rate, span):
    """Best ``d n^i`` when trading ``i`` for ``j`` at ``rate`` units of ``j`` per ``i``."""
    n = np.asarray(n, dtype=float)
    c = np.zeros(n.size)
    c[i], c[j] = 1.0, -rate
    base = evaluate(idx, n, ww)
    return _argmax_1d(lambda d: _safe_gain(idx, _moved(n, d, c), _ref(ww, n.size), base), -span, span)


def metabolism_oracle(idx, n, ww, inputs, rates, k, span):
    """Best output ``d n^k`` for the process ``inputs -> k``."""
    n = np.asarray(n, dtype=float)
    c = np.zeros(n.size)
    c[k] = 1.0
    for x, r in zip(inputs, rates):
        c[x] -= r
    base = evaluate(idx, n, ww)
    return _argmax_1d(lambda d: _safe_gain(idx, _moved(n, d, c), _ref(ww, n.size), base), 0.0, span)


def barter_oracle(idx, na, wa, nb, wb, i, j, span, rate_guess, rate_span):
    """Egalitarian barter on the zero-excess-demand line.

    ``a`` receives ``d`` of ``i`` and pays ``rate * d`` of ``j``; ``b`` takes
    the opposite side. For each ``d`` the rate is solved so both exact gains
    are equal, then the common gain is maximized over ``d``. This maximizes
    ``min(gain_a, gain_b)`` over quantity and rate. Returns ``(d, rate, gain)``.
    """
    na, nb = np.asarray(na, float), np.asarray(nb, float)
    ba, bb = evaluate(idx, na, wa), evaluate(idx, nb, wb)
    lo_r, hi_r = rate_guess - rate_span, rate_guess + rate_span

    def gains(d, rate):
        ma, mb = na.copy(), nb.copy()
        ma[i] += d
        ma[j] -= rate * d
        mb[i] -= d
        mb[j] += rate * d
        if np.any(ma <= 0) or np.any(mb <= 0):
            return -np.inf, -np.inf
        return evaluate(idx, ma, wa) - ba, evaluate(idx, mb, wb) - bb

    def fair(d):
        if d == 0:
            return rate_guess, 0.0

        def diff(r):
            ga, gb = gains(d, r)
            return ga - gb

        f_lo, f_hi = diff(lo_r), diff(hi_r)
        if not (np.isfinite(f_lo) and np.isfinite(f_hi)) or f_lo * f_hi > 0:
            return np.nan, -np.inf
        r = brentq(diff, lo_r, hi_r, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        return r, gains(d, r)[0]

    def common(ds):
        return np.array([fair(float(x))[1] for x in np.atleast_1d(ds)])

    d, _ = _argmax_1d(common, -span, span, grid=201)
    r, g = fair(d)
    return d, float(r), float(g)
