"""Per-step records and the run-level metrics container."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import EconomyState

SKIP_KEYS = (
    "barter_no_gain",
    "barter_n_min",
    "barter_coefficient",
    "production_n_min",
    "mm_breakdown",
    "mm_fill_n_min",
)


@dataclass
class StepRecord:
    executed: int = 0
    productions: int = 0
    pair_counts: np.ndarray | None = None   # (P, P) executed barters per product pair, upper triangle
    closing_price: float = np.nan
    model_price: float = np.nan
    mm_profit: float = 0.0
    skips: dict = field(default_factory=lambda: dict.fromkeys(SKIP_KEYS, 0))


@dataclass
class RunMetrics:
    """Time series over steps ``0..T``; index 0 is the initial state."""

    name: str
    market_kind: str
    money_product: int
    inventories: np.ndarray          # (T+1, N, P)
    ww: np.ndarray                   # (T+1, N, P) reference vectors
    executed: np.ndarray             # (T+1,)
    productions: np.ndarray          # (T+1,)
    pair_counts: np.ndarray          # (T+1, P, P)
    closing_price: np.ndarray        # (T+1,) NaN for decentralized runs
    model_price: np.ndarray          # (T+1,) NaN unless a shared model exists
    mm_profit_step: np.ndarray       # (T+1,)
    skips: dict                      # key -> (T+1,) int

    @classmethod
    def collect(cls, name, market_kind, money_product, states, records) -> "RunMetrics":
        P = states[0].n_products
        pc = np.stack([r.pair_counts if r.pair_counts is not None else np.zeros((P, P), np.int64)
                       for r in records])
        return cls(
            name=name,
            market_kind=market_kind,
            money_product=int(money_product),
            inventories=np.stack([s.inventories for s in states]),
            ww=np.stack([s.ww for s in states]),
            executed=np.array([r.executed for r in records], dtype=np.int64),
            productions=np.array([r.productions for r in records], dtype=np.int64),
            pair_counts=pc.astype(np.int64),
            closing_price=np.array([r.closing_price for r in records], dtype=float),
            model_price=np.array([r.model_price for r in records], dtype=float),
            mm_profit_step=np.array([r.mm_profit for r in records], dtype=float),
            skips={k: np.array([r.skips[k] for r in records], dtype=np.int64) for k in SKIP_KEYS},
        )

    @property
    def steps(self) -> int:
        return self.inventories.shape[0] - 1

    @property
    def n_agents(self) -> int:
        return self.inventories.shape[1]

    @property
    def n_products(self) -> int:
        return self.inventories.shape[2]

    def state(self, t: int) -> EconomyState:
        return EconomyState(self.inventories[t], self.ww[t], t)

    def totals(self) -> np.ndarray:
        return self.inventories.sum(axis=1)

    def rates(self, i: int, j: int) -> np.ndarray:
        """``(T+1, N)`` array of every agent's ``rates[i][j]``."""
        return self.ww[:, :, i] / self.ww[:, :, j]

    def mean_rate(self, i: int, j: int) -> np.ndarray:
        return self.rates(i, j).mean(axis=1)

    def var_rate(self, i: int, j: int) -> np.ndarray:
        return self.rates(i, j).var(axis=1)

    def mean_log_rate(self, i: int, j: int) -> np.ndarray:
        return np.log(self.rates(i, j)).mean(axis=1)

    def fundamental(self, i: int, j: int) -> np.ndarray:
        """Totals ratio ``n^i / n^j``: the equilibrium value of ``rates[i][j]``."""
        t = self.totals()
        return t[:, i] / t[:, j]

    def fraction_using(self, k: int | None = None) -> np.ndarray:
        """Share of executed barters whose pair includes ``k``; NaN when none executed."""
        k = self.money_product if k is None else k
        involving = self.pair_counts[:, k, :].sum(axis=1) + self.pair_counts[:, :, k].sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.executed > 0, involving / np.maximum(self.executed, 1), np.nan)

    @property
    def fraction_using_k(self) -> np.ndarray:
        return self.fraction_using()

    def mm_profit(self) -> np.ndarray:
        """Cumulative market-maker profit."""
        return np.cumsum(self.mm_profit_step)

    def skip_totals(self) -> dict:
        return {k: int(v.sum()) for k, v in self.skips.items()}
