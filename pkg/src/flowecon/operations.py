"""Linearized economic operations.

Every flow is a single Newton step on the second-order expansion of the
satisfaction change around zero trade. All derivatives are taken at the
pre-operation inventory. An operation that would push any inventory entry
below ``N_MIN`` is skipped as a whole rather than partially filled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import N_MIN, DomainError, WWMatrix
from .utility import SatisfactionIndex, grad_hess

# FlowResult.reason values
OK = "ok"
NO_GAIN = "no_gain"
COEFFICIENT = "coefficient"
N_MIN_BREACH = "n_min"


@dataclass(frozen=True)
class Agent:
    inventory: np.ndarray
    ww: WWMatrix
    index: SatisfactionIndex = field(default_factory=SatisfactionIndex)

    def __post_init__(self):
        n = np.array(self.inventory, dtype=float)
        n.setflags(write=False)
        object.__setattr__(self, "inventory", n)
        if not isinstance(self.ww, WWMatrix):
            object.__setattr__(self, "ww", WWMatrix(self.ww))
        if self.ww.n_products != n.size:
            raise DomainError("w-w matrix and inventory disagree on the number of products")

    @property
    def n_products(self) -> int:
        return self.inventory.size

    def derivatives(self):
        return grad_hess(self.index, self.inventory, self.ww)


@dataclass(frozen=True)
class FlowResult:
    """Outcome of one operation.

    ``deltas`` has one row per participant (1 for a fixed-rate trade or a
    metabolism, 2 for a barter). ``coefficient`` is the transport coefficient
    J, L or K; ``rate`` is the realized exchange rate where one exists.
    """

    deltas: np.ndarray
    satisfaction_gain: np.ndarray
    coefficient: float
    executed: bool
    reason: str = OK
    rate: Optional[float] = None

    @classmethod
    def skipped(cls, n_participants, n_products, coefficient, reason, rate=None):
        return cls(np.zeros((n_participants, n_products)), np.zeros(n_participants),
                   float(coefficient), False, reason, rate)


@dataclass(frozen=True)
class Process:
    """Metabolic process ``inputs -> output`` (one or two inputs)."""

    inputs: tuple
    output: int

    def __post_init__(self):
        ins = tuple(int(i) for i in self.inputs)
        if not 1 <= len(ins) <= 2 or len(set(ins)) != len(ins):
            raise DomainError("a process takes one or two distinct inputs")
        if int(self.output) in ins:
            raise DomainError("output product must differ from the inputs")
        object.__setattr__(self, "inputs", ins)
        object.__setattr__(self, "output", int(self.output))


@dataclass(frozen=True)
class ProductionMatrix:
    """Depletion rates ``entries[(input, output)] = P^input_output > 0``."""

    entries: Mapping

    def __post_init__(self):
        clean = {}
        for (i, k), r in dict(self.entries).items():
            if not r > 0:
                raise DomainError("production rate P^%d_%d must be > 0" % (i, k))
            clean[(int(i), int(k))] = float(r)
        object.__setattr__(self, "entries", clean)

    def rate(self, i: int, k: int) -> float:
        try:
            return self.entries[(i, k)]
        except KeyError:
            raise DomainError("production matrix has no entry P^%d_%d" % (i, k)) from None


# -- transport coefficients -------------------------------------------------

def _safe_inv(x: float) -> float:
    return 1.0 / x if x != 0 else float("nan")


def transport_j(gi, gj, hii, hjj, hij) -> float:
    """Fixed-rate transport coefficient J^ii."""
    return gj * gj * _safe_inv(2 * gi * gj * hij - hii * gj * gj - hjj * gi * gi)


def transport_l(gi, gj, hii, hjj, hij) -> float:
    """Barter transport coefficient L^iij, from derivatives of the summed index."""
    return -gj * _safe_inv(hii * gj * gj + hjj * gi * gi - 2 * gi * gj * hij)


def _check_pair(i: int, j: int, p: int):
    if i == j:
        raise DomainError("the two traded products must differ")
    if not (0 <= i < p and 0 <= j < p):
        raise DomainError("product index out of range")


def _breaches(n: np.ndarray) -> bool:
    return bool(np.any(n < N_MIN))


# -- operations -----------------------------------------------------------

def trade_fixed_rate(agent: Agent, i: int, j: int, rate: float) -> FlowResult:
    """Trade ``i`` against ``j`` at ``rate`` units of ``j`` per unit of ``i``."""
    p = agent.n_products
    _check_pair(i, j, p)
    if not rate > 0:
        raise DomainError("exchange rate must be > 0")
    g, h = agent.derivatives()
    J = transport_j(g[i], g[j], h[i, i], h[j, j], h[i, j])
    if not J > 0:
        return FlowResult.skipped(1, p, J, COEFFICIENT, rate)
    drive = g[i] - rate * g[j]
    dni = J * drive
    if dni == 0:
        return FlowResult.skipped(1, p, J, NO_GAIN, rate)
    delta = np.zeros(p)
    delta[i] = dni
    delta[j] = -rate * dni
    if _breaches(agent.inventory + delta):
        return FlowResult.skipped(1, p, J, N_MIN_BREACH, rate)
    return FlowResult(delta[None, :], np.array([0.5 * J * drive * drive]), J, True, OK, rate)


def _barter_terms(ga, gb, ha, hb, i, j):
    gi, gj = ga[i] + gb[i], ga[j] + gb[j]
    hii, hjj, hij = ha[i, i] + hb[i, i], ha[j, j] + hb[j, j], ha[i, j] + hb[i, j]
    bracket = (ga[i] - gb[i]) * gj - gi * (ga[j] - gb[j])
    L = transport_l(gi, gj, hii, hjj, hij)
    gain = L * bracket * bracket / (4 * gj)
    return L, bracket, gain, gi / gj


def _barter_from_terms(a, b, i, j, L, bracket, gain, rate):
    p = a.n_products
    if not L > 0:
        return FlowResult.skipped(2, p, L, COEFFICIENT, rate)
    dni = L * bracket
    if dni == 0:
        return FlowResult.skipped(2, p, L, NO_GAIN, rate)
    d = np.zeros(p)
    d[i] = dni
    d[j] = -rate * dni
    if _breaches(a.inventory + d) or _breaches(b.inventory - d):
        return FlowResult.skipped(2, p, L, N_MIN_BREACH, rate)
    return FlowResult(np.stack([d, -d]), np.array([gain, gain]), L, True, OK, rate)


def barter(a: Agent, b: Agent, i: int, j: int) -> FlowResult:
    """Bilateral trade of ``i`` for ``j`` at the mutually optimal rate.

    ``a`` receives ``deltas[0]`` and ``b`` receives ``deltas[1] = -deltas[0]``.
    ``rate`` is the realized price in units of ``j`` per unit of ``i``.
    """
    p = a.n_products
    _check_pair(i, j, p)
    if b.n_products != p:
        raise DomainError("agents disagree on the number of products")
    ga, ha = a.derivatives()
    gb, hb = b.derivatives()
    return _barter_from_terms(a, b, i, j, *_barter_terms(ga, gb, ha, hb, i, j))


def best_barter_pair(a: Agent, b: Agent):
    """Pick the product pair with the largest mutual gain.

    Returns ``(i, j, flow)`` with ``i < j``; ties go to the lexicographically
    smallest pair. When no pair offers a positive gain, returns ``(-1, -1, flow)``
    with ``flow.executed`` false.
    """
    p = a.n_products
    ga, ha = a.derivatives()
    gb, hb = b.derivatives()
    best = None
    for i in range(p):
        for j in range(i + 1, p):
            terms = _barter_terms(ga, gb, ha, hb, i, j)
            L, _, gain, _ = terms
            if L > 0 and gain > 0 and (best is None or gain > best[2][2]):
                best = (i, j, terms)
    if best is None:
        return -1, -1, FlowResult.skipped(2, p, float("nan"), NO_GAIN)
    i, j, terms = best
    return i, j, _barter_from_terms(a, b, i, j, *terms)


def _process_terms(g, h, inputs, rates, k):
    drive = g[k] - sum(r * g[m] for m, r in zip(inputs, rates))
    curv = h[k, k]
    for m, rm in zip(inputs, rates):
        curv -= 2 * rm * h[m, k]
        for l, rl in zip(inputs, rates):
            curv += rm * rl * h[m, l]
    K = -_safe_inv(curv)
    return K, drive


def metabolize(agent: Agent, inputs, k: int, pm: ProductionMatrix) -> FlowResult:
    """Run the process ``inputs -> k`` at its linearized optimal scale."""
    proc = Process(tuple(np.atleast_1d(inputs)), k)
    rates = [pm.rate(m, proc.output) for m in proc.inputs]
    g, h = agent.derivatives()
    return _metabolize_from(agent, proc, rates, *_process_terms(g, h, proc.inputs, rates, proc.output))


def _metabolize_from(agent, proc, rates, K, drive):
    p = agent.n_products
    if not drive > 0:
        return FlowResult.skipped(1, p, K, NO_GAIN)
    if not K > 0:
        return FlowResult.skipped(1, p, K, COEFFICIENT)
    dnk = K * drive
    d = np.zeros(p)
    d[proc.output] = dnk
    for m, r in zip(proc.inputs, rates):
        d[m] = -r * dnk
    if _breaches(agent.inventory + d):
        return FlowResult.skipped(1, p, K, N_MIN_BREACH)
    return FlowResult(d[None, :], np.array([0.5 * K * drive * drive]), K, True)


def best_metabolism(agent: Agent, skills: Sequence[Process], pm: ProductionMatrix) -> FlowResult:
    """Perform the allowed process with the largest gain, if any gain is positive.

    Ties go to the earliest process in ``skills``.
    """
    p = agent.n_products
    g, h = agent.derivatives()
    best = None
    for proc in skills:
        rates = [pm.rate(m, proc.output) for m in proc.inputs]
        K, drive = _process_terms(g, h, proc.inputs, rates, proc.output)
        if drive > 0 and K > 0:
            gain = 0.5 * K * drive * drive
            if best is None or gain > best[0]:
                best = (gain, proc, rates, K, drive)
    if best is None:
        return FlowResult.skipped(1, p, float("nan"), NO_GAIN)
    return _metabolize_from(agent, *best[1:])


class MarketBreakdown(ArithmeticError):
    """The market maker's price-adjustment denominator is not positive."""


@dataclass(frozen=True)
class MarketMakerResult:
    price: float
    fills: np.ndarray      # per-agent delta of product i
    deltas: np.ndarray     # (N, P) inventory changes
    mm_profit: float
    excess_demand: float   # D(M_{n-1})
    skipped: np.ndarray    # agents whose fill would breach N_MIN
    coefficients: np.ndarray


def market_maker_step(prev_price, inventories, g, h, i, j) -> MarketMakerResult:
    """Price update and fills from per-agent derivatives (arrays over agents)."""
    if not prev_price > 0:
        raise DomainError("previous price must be > 0")
    gi, gj = g[:, i], g[:, j]
    den = 2 * gi * gj * h[:, i, j] - h[:, i, i] * gj ** 2 - h[:, j, j] * gi ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        J = np.where(den != 0, gj ** 2 / den, np.nan)
    weight = np.sum(J * gj)
    if not weight > 0:
        raise MarketBreakdown("sum_a J_a d_j Omega_a = %r is not positive" % weight)
    excess = float(np.sum(J * (gi - prev_price * gj)))
    price = prev_price + 0.5 * excess / weight
    fills = J * (gi - price * gj)
    profit = float(np.sum(fills) * (price - prev_price))
    deltas = np.zeros_like(inventories)
    deltas[:, i] = fills
    deltas[:, j] = -price * fills
    skipped = np.any(inventories + deltas < N_MIN, axis=1)
    deltas[skipped] = 0.0
    fills = np.where(skipped, 0.0, fills)
    return MarketMakerResult(float(price), fills, deltas, profit, excess, skipped, J)


def market_maker_update(prev_price: float, agents: Sequence[Agent], i: int, j: int) -> MarketMakerResult:
    """One market-maker step; ``prices`` are units of ``j`` per unit of ``i``.

    ``mm_profit`` is ``D(M_n) (M_n - M_{n-1})`` with ``D`` the linearized excess
    demand of every agent, which equals ``D(M_{n-1})^2 / (4 sum_a J_a d_j Omega_a)``.
    """
    if not agents:
        raise DomainError("market maker needs at least one agent")
    _check_pair(i, j, agents[0].n_products)
    n = np.stack([a.inventory for a in agents])
    gh = [a.derivatives() for a in agents]
    g = np.stack([x[0] for x in gh])
    h = np.stack([x[1] for x in gh])
    return market_maker_step(prev_price, n, g, h, i, j)


def update_ww_after_fixed_trade(agent: Agent, grad=None) -> WWMatrix:
    """New w-w matrix ``rates[i][j] = d_j Omega / d_i Omega`` at the pre-trade point."""
    g = agent.derivatives()[0] if grad is None else np.asarray(grad, dtype=float)
    if np.any(g <= 0):
        raise DomainError("gradient must be strictly positive")
    return WWMatrix(g[0] / g)


def update_ww_after_barter(a: Agent, b: Agent) -> WWMatrix:
    """Shared w-w matrix from the summed pre-trade gradients of both agents."""
    g = a.derivatives()[0] + b.derivatives()[0]
    return WWMatrix(g[0] / g)
