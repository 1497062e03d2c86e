"""Run diagnostics: window detection, trend fits and pattern checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


def find_windows(series, accept: Callable[[float], bool], min_len: int, start: int = 0) -> list[tuple[int, int]]:
    """Greedy maximal windows ``[s, e)`` in which every run of ``min_len`` steps has a mean passing ``accept``.

    A window grows while its trailing ``min_len`` steps still pass, so a long
    good stretch cannot carry a bad tail. NaN entries are ignored when
    averaging. Windows do not overlap.
    """
    x = np.asarray(series, dtype=float)
    out = []
    s = start
    while s + min_len <= x.size:
        seg = x[s:s + min_len]
        if np.all(np.isnan(seg)) or not accept(np.nanmean(seg)):
            s += 1
            continue
        e = s + min_len
        while e < x.size:
            tail = x[e + 1 - min_len:e + 1]
            if np.all(np.isnan(tail)) or not accept(np.nanmean(tail)):
                break
            e += 1
        out.append((s, e))
        s = e
    return out


def monetary_windows(fraction, threshold: float = 0.9, min_len: int = 20, start: int = 1):
    return find_windows(fraction, lambda m: m > threshold, min_len, start)


def linear_fit(t, y) -> tuple[float, float, float]:
    """Least-squares line; returns ``(slope, intercept, r_squared)``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, icpt = np.polyfit(t, y, 1)
    resid = y - (slope * t + icpt)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(icpt), float(r2)


def sign_changes(x) -> int:
    d = np.sign(np.diff(np.asarray(x, dtype=float)))
    d = d[d != 0]
    return int(np.sum(d[1:] != d[:-1]))


@dataclass(frozen=True)
class BubbleReport:
    detected: bool
    peak_step: int
    peak_price: float
    crash_step: Optional[int]
    fundamental_monotone: bool


def detect_bubble(price, fundamental, rise: float = 1.5, crash: float = 0.1, transient: int = 1) -> BubbleReport:
    """Peak above ``rise`` times the start, then a fall below ``crash`` times the peak,
    with the fundamental non-increasing after ``transient`` steps."""
    p = np.asarray(price, dtype=float)
    f = np.asarray(fundamental, dtype=float)
    k = int(np.nanargmax(p))
    below = np.nonzero(p[k:] < crash * p[k])[0]
    crash_step = int(k + below[0]) if below.size else None
    mono = bool(np.all(np.diff(f[transient:]) <= 0))
    ok = bool(p[k] > rise * p[0] and crash_step is not None and mono)
    return BubbleReport(ok, k, float(p[k]), crash_step, mono)


def longest_run(mask) -> int:
    best = cur = 0
    for m in np.asarray(mask, dtype=bool):
        cur = cur + 1 if m else 0
        best = max(best, cur)
    return best
