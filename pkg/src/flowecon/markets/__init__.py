"""Simulation engines and scenario configuration."""

from .centralized import CentralizedEngine, run_centralized, step_centralized
from .config import (ConfigError, EndowmentConfig, ExpectationConfig, MarketKind, ProcessSpec,
                     ProductionConfig, ScenarioConfig, SkillMode, TradeChoice, dumps, from_dict,
                     loads, parse_config)
from .decentralized import DecentralizedEngine, run_decentralized, step_decentralized
from .metrics import RunMetrics, StepRecord
from .rng import random_pairing, substream


def run(config: ScenarioConfig, steps=None) -> RunMetrics:
    """Dispatch on ``config.market_kind``."""
    if config.market_kind is MarketKind.CENTRALIZED:
        return run_centralized(config, steps)
    return run_decentralized(config, steps)


__all__ = [
    "CentralizedEngine", "ConfigError", "DecentralizedEngine", "EndowmentConfig", "ExpectationConfig",
    "MarketKind", "ProcessSpec", "ProductionConfig", "RunMetrics", "ScenarioConfig", "SkillMode",
    "StepRecord", "TradeChoice", "dumps", "from_dict", "loads", "parse_config", "random_pairing",
    "run", "run_centralized", "run_decentralized", "step_centralized", "step_decentralized", "substream",
]
