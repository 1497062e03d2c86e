"""Two-product market cleared by a market maker that adjusts price to excess demand.

Prices are quoted as units of product 1 per unit of product 0, which is the
agents' ``rates[1][0]`` (the reference-vector entry ``v_1``).
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..core import EconomyState
from ..operations import MarketBreakdown, market_maker_step
from ..utility import ExpectationKind, ExpectationModel, SatisfactionIndex, UtilityParams, grad_hess
from .config import ExpectationConfig, MarketKind, ScenarioConfig
from .metrics import RunMetrics, StepRecord
from .rng import STREAM_INIT, STREAM_RETURNS, substream


def initial_state(config: ScenarioConfig) -> EconomyState:
    """Inventories from the init stream; every agent starts at the initial price."""
    rng = substream(config.seed, STREAM_INIT)
    N = config.n_agents
    n = np.empty((N, 2))
    for k, (lo, hi) in enumerate(config.init_inventory):
        n[:, k] = rng.uniform(lo, hi, N)
    v = np.ones((N, 2))
    v[:, 1] = config.initial_price
    return EconomyState(n, v, 0)


class CentralizedEngine:
    def __init__(self, config: ScenarioConfig):
        if config.market_kind is not MarketKind.CENTRALIZED:
            raise ValueError("CentralizedEngine needs a centralized config")
        self.config = config
        x = config.expectation or ExpectationConfig()
        self.expectation = x
        model = ExpectationModel(x.kind, x.sigma, x.mu)
        self.index = SatisfactionIndex(UtilityParams(config.nu), model)

    def step(self, state: EconomyState, prev_price: float,
             model_price: Optional[float] = None) -> tuple[EconomyState, float, StepRecord]:
        """One clearing round.

        ``state.ww[:, 1]`` holds each agent's expected price for this round.
        Returns the post-trade state (with next-round expectations), the
        closing price, and the step record. ``model_price`` is the shared
        fundamentalist model value (random-walk expectations only).
        """
        cfg, x = self.config, self.expectation
        t = state.step + 1
        n = state.inventories.copy()
        v = state.ww
        N = n.shape[0]
        rec = StepRecord()
        returns = None
        if x.kind is ExpectationKind.SPECULATIVE:
            returns = substream(cfg.seed, STREAM_RETURNS, t).normal(x.mu, x.sigma, N)
        g, h = grad_hess(self.index, n, v, returns)
        try:
            res = market_maker_step(prev_price, n, g, h, 0, 1)
        except MarketBreakdown:
            rec.skips["mm_breakdown"] = 1
            price = prev_price
        else:
            if not (np.isfinite(res.price) and res.price > 0):
                rec.skips["mm_breakdown"] = 1
                price = prev_price
            else:
                price = res.price
                n += res.deltas
                rec.mm_profit = res.mm_profit
                rec.executed = int(np.sum(res.fills != 0))
                rec.skips["mm_fill_n_min"] = int(np.sum(res.skipped))
        rec.closing_price = price

        v_next = np.ones((N, 2))
        if x.kind is ExpectationKind.FIXED_RANDOM_WALK:
            # one shared model shock per step for every agent
            shock = substream(cfg.seed, STREAM_RETURNS, t).normal(0.0, x.sigma) if x.sigma > 0 else 0.0
            model_price = float(model_price * (1.0 + shock))
            v_next[:, 1] = model_price
            rec.model_price = model_price
        else:
            v_next[:, 1] = price
        return EconomyState(n, v_next, t), price, rec

    def run(self, steps: Optional[int] = None) -> RunMetrics:
        cfg = self.config
        steps = cfg.steps if steps is None else int(steps)
        if steps < 0:
            raise ValueError("steps must be >= 0")
        state = initial_state(cfg)
        price = cfg.initial_price
        model = cfg.initial_price if self.expectation.kind is ExpectationKind.FIXED_RANDOM_WALK else None
        first = StepRecord(closing_price=price, model_price=np.nan if model is None else model)
        states, records = [state], [first]
        for _ in range(steps):
            state, price, rec = self.step(state, price, model)
            if model is not None:
                model = rec.model_price
            states.append(state)
            records.append(rec)
        return RunMetrics.collect(cfg.name, cfg.market_kind.value, cfg.k_product, states, records)


def step_centralized(state: EconomyState, config: ScenarioConfig, prev_price: float,
                     model_price: Optional[float] = None):
    return CentralizedEngine(config).step(state, prev_price, model_price)


def run_centralized(config: ScenarioConfig, steps: Optional[int] = None) -> RunMetrics:
    return CentralizedEngine(config).run(steps)
