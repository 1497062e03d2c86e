"""Gauge-invariant agent-based market simulator.

Agents hold inventories and internally consistent exchange-rate opinions,
trade or transform products along satisfaction gradients, and are studied
in random-pairing barter markets and in a market-maker market.
"""

__version__ = "0.1.0"

from .core import (N_MIN, DomainError, EconomyState, GaugeTransform, WWMatrix,
                   complete_ww_from_reference, gauge_transform, validate_ww_consistency)
from .utility import (ExpectationKind, ExpectationModel, SatisfactionIndex, UtilityForm,
                      UtilityParams, evaluate, finite_diff_check, grad, grad_hess, hess)

__all__ = [
    "N_MIN", "DomainError", "EconomyState", "ExpectationKind", "ExpectationModel", "GaugeTransform",
    "SatisfactionIndex", "UtilityForm", "UtilityParams", "WWMatrix", "complete_ww_from_reference",
    "evaluate", "finite_diff_check", "gauge_transform", "grad", "grad_hess", "hess",
    "validate_ww_consistency",
]
