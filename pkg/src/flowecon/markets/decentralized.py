"""Random-pairing barter market with optional production and endowment shocks."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from .. import kernels
from ..core import EconomyState
from ..utility import SatisfactionIndex, UtilityForm, UtilityParams, grad_hess
from .config import MarketKind, ScenarioConfig, SkillMode, TradeChoice
from .metrics import RunMetrics, StepRecord
from .rng import (STREAM_CHOICE, STREAM_ENDOWMENT, STREAM_INIT, STREAM_PAIRING,
                  random_pairing, substream)


def _process_tables(config: ScenarioConfig):
    procs = config.production.processes if config.production is not None else ()
    m = len(procs)
    proc_in = np.full((m, 2), -1, dtype=np.int64)
    proc_rate = np.zeros((m, 2))
    proc_out = np.zeros(m, dtype=np.int64)
    for r, pr in enumerate(procs):
        proc_in[r, :len(pr.inputs)] = pr.inputs
        proc_rate[r, :len(pr.rates)] = pr.rates
        proc_out[r] = pr.output
    return proc_in, proc_rate, proc_out


def initial_state(config: ScenarioConfig) -> tuple[EconomyState, np.ndarray]:
    """Draw the starting state and the skill table from the init stream.

    Draw order: inventories product by product, then ``rates[0][j]`` for
    ``j = 1..P-1``, then (assigned skills only) one process index per agent.
    Returns ``(state, allowed)`` with ``allowed`` an ``(N, M)`` boolean table.
    """
    rng = substream(config.seed, STREAM_INIT)
    N, P = config.n_agents, config.n_products
    n = np.empty((N, P))
    for k, (lo, hi) in enumerate(config.init_inventory):
        n[:, k] = rng.uniform(lo, hi, N)
    v = np.ones((N, P))
    for j, (lo, hi) in enumerate(config.init_ww, start=1):
        # init_ww draws the rate of product 0 in units of j, i.e. 1 / v_j
        v[:, j] = 1.0 / rng.uniform(lo, hi, N)
    m = len(config.production.processes) if config.production is not None else 0
    allowed = np.zeros((N, m), dtype=bool)
    if config.production is not None:
        mode = config.production.skill_mode
        if mode is SkillMode.CHOICE:
            allowed[:] = True
        elif mode is SkillMode.ASSIGNED_RANDOM and m:
            allowed[np.arange(N), rng.integers(0, m, N)] = True
    return EconomyState(n, v, 0), allowed


class DecentralizedEngine:
    """Holds the fixed parts of a decentralized run (skills, process tables)."""

    def __init__(self, config: ScenarioConfig, workers: Optional[int] = None):
        if config.market_kind is not MarketKind.DECENTRALIZED:
            raise ValueError("DecentralizedEngine needs a decentralized config")
        self.config = config
        self.workers = max(1, int(config.workers if workers is None else workers))
        self.index = SatisfactionIndex(UtilityParams(config.nu, config.utility_form))
        self.proc_in, self.proc_rate, self.proc_out = _process_tables(config)
        self.state0, self.allowed = initial_state(config)
        self.n_pairs = len(kernels.product_pairs(config.n_products)[0])

    def derivatives(self, n: np.ndarray, v: np.ndarray):
        if self.index.params.form is UtilityForm.CES_LOG:
            return kernels.ces_derivatives(n, v[:, :1] / v, self.config.nu)
        return grad_hess(self.index, n, v)

    def _barter_batch(self, g, h, n, ia, ib, forced):
        if self.workers == 1 or ia.size < 2 * self.workers:
            return kernels.barter_choice(g, h, n, ia, ib, forced)
        bounds = np.linspace(0, ia.size, self.workers + 1).astype(int)
        chunks = [(bounds[c], bounds[c + 1]) for c in range(self.workers)]
        with ThreadPoolExecutor(self.workers) as pool:
            parts = list(pool.map(lambda se: kernels.barter_choice(
                g, h, n, ia[se[0]:se[1]], ib[se[0]:se[1]], forced[se[0]:se[1]]), chunks))
        # commit in pair order regardless of completion order
        return tuple(np.concatenate([p[c] for p in parts]) for c in range(7))

    def step(self, state: EconomyState) -> tuple[EconomyState, StepRecord]:
        cfg = self.config
        t = state.step + 1
        n = state.inventories.copy()
        v = state.ww.copy()
        N, P = n.shape
        rec = StepRecord(pair_counts=np.zeros((P, P), dtype=np.int64))

        if cfg.production is not None and self.allowed.shape[1]:
            g, h = self.derivatives(n, v)
            _, deltas, _, status = kernels.metabolism_choice(
                g, h, n, self.proc_in, self.proc_rate, self.proc_out, self.allowed)
            n += deltas
            rec.productions = int(np.sum(status == kernels.EXECUTED))
            rec.skips["production_n_min"] = int(np.sum(status == kernels.N_MIN_BREACH))

        if cfg.endowment is not None:
            a = cfg.endowment.half_width
            r = substream(cfg.seed, STREAM_ENDOWMENT, t).uniform(-a, a, N)
            n[:, cfg.endowment.product] *= 1.0 + r

        pairs = random_pairing(np.arange(N), substream(cfg.seed, STREAM_PAIRING, t))
        ia, ib = pairs[:, 0].copy(), pairs[:, 1].copy()
        if cfg.trade_choice is TradeChoice.UNIFORM:
            forced = substream(cfg.seed, STREAM_CHOICE, t).integers(0, self.n_pairs, ia.size)
        else:
            forced = np.full(ia.size, -1, dtype=np.int64)

        g, h = self.derivatives(n, v)
        pi, pj, dni, dnj, _, status, coef_fail = self._barter_batch(g, h, n, ia, ib, forced)
        ex = status == kernels.EXECUTED
        ea, eb = ia[ex], ib[ex]
        n[ea, pi[ex]] += dni[ex]
        n[ea, pj[ex]] += dnj[ex]
        n[eb, pi[ex]] -= dni[ex]
        n[eb, pj[ex]] -= dnj[ex]
        gs = g[ea] + g[eb]
        v_new = gs[:, :1] / gs
        v[ea] = v_new
        v[eb] = v_new

        rec.executed = int(ex.sum())
        np.add.at(rec.pair_counts, (pi[ex], pj[ex]), 1)
        rec.skips["barter_no_gain"] = int(np.sum(status == kernels.NO_GAIN))
        rec.skips["barter_n_min"] = int(np.sum(status == kernels.N_MIN_BREACH))
        rec.skips["barter_coefficient"] = int(np.sum(status == kernels.COEFFICIENT))
        return EconomyState(n, v, t), rec

    def run(self, steps: Optional[int] = None) -> RunMetrics:
        steps = self.config.steps if steps is None else int(steps)
        if steps < 0:
            raise ValueError("steps must be >= 0")
        state = self.state0
        states, records = [state], [StepRecord()]
        for _ in range(steps):
            state, rec = self.step(state)
            states.append(state)
            records.append(rec)
        return RunMetrics.collect(self.config.name, self.config.market_kind.value,
                                  self.config.k_product, states, records)


def step_decentralized(state: EconomyState, config: ScenarioConfig,
                       engine: Optional[DecentralizedEngine] = None) -> tuple[EconomyState, StepRecord]:
    """Advance one step; randomness comes from ``config.seed`` and ``state.step``."""
    engine = engine or DecentralizedEngine(config)
    return engine.step(state)


def run_decentralized(config: ScenarioConfig, steps: Optional[int] = None,
                      workers: Optional[int] = None) -> RunMetrics:
    return DecentralizedEngine(config, workers).run(steps)
