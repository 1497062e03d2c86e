"""Satisfaction indices with analytic first and second derivatives.

All array functions broadcast over leading axes: an inventory of shape ``(P,)``
gives a gradient of shape ``(P,)`` and a Hessian of shape ``(P, P)``; a batch of
shape ``(N, P)`` gives ``(N, P)`` and ``(N, P, P)``.

The CES-log index is

    Omega = log sum_i (w_i n_i)^nu,    w_i = rates[0][i]

so product 0 is the unit of account. Any other reference product shifts
``Omega`` by a constant and leaves every derivative ratio unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .core import N_MIN, DomainError, WWMatrix


class UtilityForm(str, Enum):
    CES_LOG = "ces_log"
    LOG_SEPARABLE = "log_separable"


class ExpectationKind(str, Enum):
    NAIVE = "naive"
    FIXED_RANDOM_WALK = "fixed_random_walk"
    SPECULATIVE = "speculative"


@dataclass(frozen=True)
class UtilityParams:
    nu: float = 0.5
    form: UtilityForm = UtilityForm.CES_LOG

    def __post_init__(self):
        object.__setattr__(self, "form", UtilityForm(self.form))
        if self.form is UtilityForm.CES_LOG and not (0.0 < self.nu < 1.0):
            raise DomainError("CES_LOG requires 0 < nu < 1, got %r" % (self.nu,))


@dataclass(frozen=True)
class ExpectationModel:
    """How an agent forms the rate entering its index.

    ``current_return`` is the log return drawn this step (speculative model).
    ``sigma`` is the standard deviation of the agent's return model; only the
    fixed random walk uses it, through a second-order variance correction.
    """

    kind: ExpectationKind = ExpectationKind.NAIVE
    sigma: float = 0.0
    mu: float = 0.0
    current_return: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ExpectationKind(self.kind))
        if self.sigma < 0:
            raise DomainError("sigma must be >= 0")
        if self.kind is ExpectationKind.NAIVE and self.sigma != 0:
            raise DomainError("NAIVE expectations carry zero variance")


@dataclass(frozen=True)
class SatisfactionIndex:
    params: UtilityParams = UtilityParams()
    expectation: Optional[ExpectationModel] = None

    def value(self, inv, ww) -> float:
        return evaluate(self, inv, ww)

    def gradient(self, inv, ww) -> np.ndarray:
        return grad(self, inv, ww)

    def hessian(self, inv, ww) -> np.ndarray:
        return hess(self, inv, ww)


def _as_weights(ww, p: int) -> np.ndarray:
    if isinstance(ww, WWMatrix):
        w = ww.weights()
    elif ww is None:
        w = np.ones(p)
    else:
        # reference vector(s); full matrices go through WWMatrix.from_rates
        v = np.asarray(ww, dtype=float)
        w = v[..., :1] / v
    return w


def _check_inventory(n: np.ndarray) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if np.any(~(n >= N_MIN)):
        raise DomainError("inventory entries must be >= n_min = %g" % N_MIN)
    return n


def _effective(idx: SatisfactionIndex, n, ww, returns=None):
    """Inventory and weights after applying the speculative return shift."""
    n = _check_inventory(n)
    w = np.broadcast_to(_as_weights(ww, n.shape[-1]), n.shape).astype(float)
    exp = idx.expectation
    if exp is not None and exp.kind is ExpectationKind.SPECULATIVE:
        r = exp.current_return if returns is None else np.asarray(returns, dtype=float)
        w = w.copy()
        w[..., 0] = w[..., 0] * np.exp(r)
    return n, w


def _rw_sigma(idx: SatisfactionIndex) -> float:
    exp = idx.expectation
    if exp is not None and exp.kind is ExpectationKind.FIXED_RANDOM_WALK:
        return exp.sigma
    return 0.0


# -- CES pieces ---------------------------------------------------------------

def ces_value(n, w, nu):
    return np.log(np.sum((w * n) ** nu, axis=-1))


def ces_grad_hess(n, w, nu):
    a = (w * n) ** nu
    d = np.sum(a, axis=-1, keepdims=True)
    g = nu * a / (n * d)
    h = -g[..., :, None] * g[..., None, :]
    diag = nu * (nu - 1.0) * a / (n * n * d)
    idx = np.arange(n.shape[-1])
    h[..., idx, idx] += diag
    return g, h


# Fixed-random-walk index, with A the risky product's CES term (product 0)
# and B the sum of the remaining terms:
#   F(A, B) = log(A + B) - s * A (A + c B) / (A + B)^2,  s = nu sigma^2 / 2, c = 1 - nu

def _rw_f(A, B, nu, sigma):
    s = 0.5 * nu * sigma * sigma
    c = 1.0 - nu
    S = A + B
    N = A * A + c * A * B
    return np.log(S) - s * N / S ** 2


def _rw_partials(A, B, nu, sigma):
    s = 0.5 * nu * sigma * sigma
    c = 1.0 - nu
    S = A + B
    N = A * A + c * A * B
    NA = 2 * A + c * B
    NB = c * A
    gA = NA / S ** 2 - 2 * N / S ** 3
    gB = NB / S ** 2 - 2 * N / S ** 3
    gAA = 2 / S ** 2 - 4 * NA / S ** 3 + 6 * N / S ** 4
    gAB = c / S ** 2 - 2 * (NA + NB) / S ** 3 + 6 * N / S ** 4
    gBB = -4 * NB / S ** 3 + 6 * N / S ** 4
    inv2 = 1.0 / S ** 2
    return (1 / S - s * gA, 1 / S - s * gB,
            -inv2 - s * gAA, -inv2 - s * gAB, -inv2 - s * gBB)


def rw_grad_hess(n, w, nu, sigma):
    a = (w * n) ** nu
    A = a[..., 0]
    B = np.sum(a[..., 1:], axis=-1)
    FA, FB, FAA, FAB, FBB = _rw_partials(A, B, nu, sigma)
    d1 = nu * a / n                    # dX/dn_k
    d2 = nu * (nu - 1.0) * a / (n * n)  # d2X/dn_k^2
    p = n.shape[-1]
    risky = np.zeros(p, dtype=bool)
    risky[0] = True
    Fx = np.where(risky, FA[..., None], FB[..., None])
    g = Fx * d1
    Fxx = np.where(risky[:, None] & risky[None, :], FAA[..., None, None],
                   np.where(risky[:, None] | risky[None, :], FAB[..., None, None], FBB[..., None, None]))
    h = Fxx * (d1[..., :, None] * d1[..., None, :])
    h = 0.5 * (h + np.swapaxes(h, -1, -2))  # exact symmetry despite rounding order
    idx = np.arange(p)
    h[..., idx, idx] += Fx * d2
    return g, h


# -- public API ---------------------------------------------------------------

def evaluate(idx: SatisfactionIndex, inv, ww=None, returns=None):
    if idx.params.form is UtilityForm.LOG_SEPARABLE:
        return np.sum(np.log(_check_inventory(inv)), axis=-1)
    n, w = _effective(idx, inv, ww, returns)
    sigma = _rw_sigma(idx)
    if sigma > 0:
        a = (w * n) ** idx.params.nu
        return _rw_f(a[..., 0], np.sum(a[..., 1:], axis=-1), idx.params.nu, sigma)
    return ces_value(n, w, idx.params.nu)


def grad_hess(idx: SatisfactionIndex, inv, ww=None, returns=None):
    """Gradient and Hessian of the index in one pass."""
    if idx.params.form is UtilityForm.LOG_SEPARABLE:
        n = _check_inventory(inv)
        g = 1.0 / n
        h = np.zeros(n.shape + (n.shape[-1],))
        k = np.arange(n.shape[-1])
        h[..., k, k] = -g * g
        return g, h
    n, w = _effective(idx, inv, ww, returns)
    sigma = _rw_sigma(idx)
    if sigma > 0:
        return rw_grad_hess(n, w, idx.params.nu, sigma)
    return ces_grad_hess(n, w, idx.params.nu)


def grad(idx: SatisfactionIndex, inv, ww=None) -> np.ndarray:
    return grad_hess(idx, inv, ww)[0]


def hess(idx: SatisfactionIndex, inv, ww=None) -> np.ndarray:
    return grad_hess(idx, inv, ww)[1]


class FDReport(NamedTuple):
    grad_error: float
    hess_error: float


def finite_diff_check(idx: SatisfactionIndex, inv, ww=None, h: float = 1e-5) -> FDReport:
    """Max relative error of the analytic derivatives against central differences.

    The step is relative: coordinate ``k`` is perturbed by ``h * n_k``.
    """
    if not h > 0:
        raise DomainError("finite-difference step must be > 0")
    n = _check_inventory(inv).astype(float)
    if np.any(n * (1 - h) < N_MIN):
        raise DomainError("step too large for the smallest inventory entry")
    g, H = grad_hess(idx, n, ww)
    p = n.size
    g_fd = np.empty(p)
    H_fd = np.empty((p, p))
    for k in range(p):
        step = h * n[k]
        up, dn = n.copy(), n.copy()
        up[k] += step
        dn[k] -= step
        g_fd[k] = (evaluate(idx, up, ww) - evaluate(idx, dn, ww)) / (2 * step)
        H_fd[:, k] = (grad(idx, up, ww) - grad(idx, dn, ww)) / (2 * step)
    g_scale = np.max(np.abs(g))
    H_scale = np.max(np.abs(H))
    return FDReport(float(np.max(np.abs(g_fd - g)) / g_scale),
                    float(np.max(np.abs(H_fd - H)) / H_scale))
