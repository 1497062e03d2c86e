"""Closed-form mean-field predictions and population diagnostics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import DomainError, EconomyState


def _check_nu(nu: float) -> float:
    nu = float(nu)
    if not 0.0 < nu < 1.0:
        raise DomainError("nu must lie in (0, 1), got %r" % nu)
    return nu


@dataclass(frozen=True)
class MeanFieldPrediction:
    price_series: np.ndarray
    relaxation_time: float
    fundamental: float


def mf_price_series(M0: float, fundamental: float, nu: float, steps: int) -> np.ndarray:
    """``<M_t> = M0^(nu^t) F^(1 - nu^t)`` for ``t = 0..steps``."""
    nu = _check_nu(nu)
    if not (M0 > 0 and fundamental > 0):
        raise DomainError("M0 and the fundamental price must be > 0")
    e = nu ** np.arange(int(steps) + 1, dtype=float)
    # log form keeps the recursion exact for tiny or huge ratios
    return np.exp(e * np.log(M0) + (1.0 - e) * np.log(fundamental))


def relaxation_time(nu: float) -> float:
    return -1.0 / np.log(_check_nu(nu))


def predict(M0: float, fundamental: float, nu: float, steps: int) -> MeanFieldPrediction:
    return MeanFieldPrediction(mf_price_series(M0, fundamental, nu, steps), relaxation_time(nu), float(fundamental))


def fit_relaxation_time(prices, fundamental, floor: float = 1e-3, t_min: int = 1) -> float:
    """Decay constant of ``|<M_t> - F| / F`` from a log-linear least-squares fit.

    Uses steps from ``t_min`` up to (not including) the first step where the
    relative gap drops below ``floor``; past that point sampling noise
    dominates. Returns NaN when fewer than two points are usable.
    """
    m = np.asarray(prices, dtype=float)
    f = np.broadcast_to(np.asarray(fundamental, dtype=float), m.shape)
    gap = np.abs(m - f) / f
    end = t_min
    while end < gap.size and gap[end] >= floor:
        end += 1
    t = np.arange(t_min, end)
    if t.size < 2:
        return float("nan")
    slope = np.polyfit(t, np.log(gap[t_min:end]), 1)[0]
    return float(-1.0 / slope) if slope < 0 else float("inf")


class FlowTerms(NamedTuple):
    inventory: float
    price: float

    @property
    def total(self) -> float:
        return self.inventory + self.price


def mf_flow(mean_i, mean_j, mean_M, nu, dn_i, dn_j, dM) -> FlowTerms:
    """Linear-response flow of product i to the first agent of a pair.

    ``dn_i``, ``dn_j`` and ``dM`` are the pair differences of inventory and
    of the price (``rates[i][j]``) fluctuations. The inventory term is
    driven by inventory imbalance, the price term by price disagreement.
    """
    nu = float(nu)
    if nu == 1.0:
        raise DomainError("the flow expansion is singular at nu = 1")
    if not (mean_i > 0 and mean_j > 0 and mean_M > 0):
        raise DomainError("means must be positive")
    aj = (mean_M * mean_j) ** nu
    D = mean_i ** nu + aj
    inventory = -aj / (2.0 * D * mean_j) * (mean_j * dn_i - mean_i * dn_j)
    price = nu * mean_M ** (nu - 1.0) * mean_i * mean_j ** nu * dM / (2.0 * (nu - 1.0) * D)
    return FlowTerms(float(inventory), float(price))


def _fluctuations(n: np.ndarray) -> np.ndarray:
    mean = n.mean(axis=0)
    if np.any(mean <= 0):
        raise DomainError("per-product means must be positive")
    return (n - mean) / mean


def trade_preference_stats(state) -> np.ndarray:
    """``(P, P)`` matrix of ``<(x^i - x^j)^2>`` over the population.

    ``x^i = (n^i - <n^i>) / <n^i>``; averages use the population (1/N)
    convention. Accepts an ``EconomyState`` or an ``(N, P)`` inventory array.
    """
    n = state.inventories if isinstance(state, EconomyState) else np.asarray(state, dtype=float)
    if n.shape[0] < 2:
        raise DomainError("need at least two agents")
    x = _fluctuations(n)
    d = x[:, :, None] - x[:, None, :]
    return np.mean(d * d, axis=0)


class ResidualSummary(NamedTuple):
    median_abs: float
    max_abs: float


def equilibrium_line_residuals(state, price: float, i: int = 0, j: int = 1) -> np.ndarray:
    """Per-agent ``(price * n^j - n^i) / n^i``."""
    if not price > 0:
        raise DomainError("price must be > 0")
    n = state.inventories if isinstance(state, EconomyState) else np.asarray(state, dtype=float)
    return (price * n[:, j] - n[:, i]) / n[:, i]


def summarize_residuals(res) -> ResidualSummary:
    a = np.abs(np.asarray(res, dtype=float))
    return ResidualSummary(float(np.median(a)), float(np.max(a)))


def population_weights(state: EconomyState) -> np.ndarray:
    """CES weights ``rates[0][k]`` from the population geometric-mean price."""
    logv = np.log(state.ww).mean(axis=0)
    return np.exp(logv[0] - logv)


def dOmega_ij_meanfield(state: EconomyState, i: int, j: int, nu: float, alpha: int, beta: int,
                        warn: bool = True) -> float:
    """Leading-order mutual gain of an ``i``-``j`` barter between two agents.

    Expands around population means with all agents at the population price.
    Warns when price dispersion is not small against inventory dispersion,
    where the expansion does not apply.
    """
    nu = _check_nu(nu)
    n = state.inventories
    x = _fluctuations(n)
    w = population_weights(state)
    a = (w * n.mean(axis=0)) ** nu
    if warn:
        logr = np.log(state.ww[:, [i, j]])
        price_spread = float(np.std(logr[:, 0] - logr[:, 1]))
        inv_spread = float(np.sqrt(np.mean((x[:, i] - x[:, j]) ** 2)))
        if price_spread > inv_spread:
            warnings.warn("price dispersion %.3g exceeds inventory dispersion %.3g; the expansion "
                          "assumes agents roughly agree on prices" % (price_spread, inv_spread),
                          RuntimeWarning, stacklevel=2)
    X = x[alpha, i] - x[alpha, j] - x[beta, i] + x[beta, j]
    pref = nu * (1.0 - nu) * a[i] * a[j] / (8.0 * a.sum() * (a[i] + a[j]))
    return float(pref * X * X)


def best_pair_meanfield(state: EconomyState, nu: float, alpha: int, beta: int) -> tuple[int, int]:
    """Product pair with the largest mean-field gain (lexicographic tie-break)."""
    p = state.n_products
    best, arg = -np.inf, (-1, -1)
    for i in range(p):
        for j in range(i + 1, p):
            v = dOmega_ij_meanfield(state, i, j, nu, alpha, beta, warn=False)
            if v > best:
                best, arg = v, (i, j)
    return arg
