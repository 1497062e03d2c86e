"""State types for a scale-invariant exchange economy.

Inventories are stored as an ``(N, P)`` array of positive reals. Each agent's
what-by-what (w-w) matrix is stored as its reference vector ``v`` with
``v[i] = rates[i][0]``; the full matrix is rebuilt as ``rates[i][j] = v[i] / v[j]``,
so reciprocity and transitivity hold by construction.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

N_MIN = 1e-12
WW_TOL = 1e-9


class DomainError(ValueError):
    """Raised when an input lies outside the domain of an operation."""


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def validate_ww_consistency(m, tol: float = WW_TOL) -> bool:
    """True iff ``m`` is reciprocal and transitive within relative ``tol``."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or np.any(~np.isfinite(m)) or np.any(m <= 0):
        return False
    if not np.allclose(np.diag(m), 1.0, rtol=0.0, atol=tol):
        return False
    if not np.allclose(m * m.T, 1.0, rtol=0.0, atol=tol):
        return False
    # m[i, j] vs m[i, k] * m[k, j] for every k
    via = m[:, :, None] * m[None, :, :]  # via[i, k, j]
    rel = np.abs(via - m[:, None, :]) / m[:, None, :]
    return bool(np.all(rel <= tol))


@dataclass(frozen=True)
class WWMatrix:
    """Consistent exchange-rate opinion of one agent.

    ``rates[i, j]`` is the number of units of product ``i`` the agent would
    give for one unit of product ``j``.
    """

    reference: np.ndarray

    def __post_init__(self):
        v = _frozen(self.reference)
        if v.ndim != 1 or v.size < 2:
            raise DomainError("w-w reference vector must be 1-D with at least 2 entries")
        if np.any(~np.isfinite(v)) or np.any(v <= 0):
            raise DomainError("w-w reference vector entries must be finite and > 0")
        object.__setattr__(self, "reference", v)

    @property
    def n_products(self) -> int:
        return self.reference.size

    @property
    def rates(self) -> np.ndarray:
        v = self.reference
        r = v[:, None] / v[None, :]
        np.fill_diagonal(r, 1.0)
        return r

    def rate(self, i: int, j: int) -> float:
        return float(self.reference[i] / self.reference[j]) if i != j else 1.0

    def weights(self) -> np.ndarray:
        """Value of each product in units of product 0, i.e. ``rates[0, :]``."""
        return self.reference[0] / self.reference

    @classmethod
    def from_rates(cls, rates, tol: float = WW_TOL) -> "WWMatrix":
        """Ingest an externally supplied full matrix after checking consistency."""
        rates = np.asarray(rates, dtype=float)
        if not validate_ww_consistency(rates, tol):
            raise DomainError("w-w matrix is not consistent within tolerance %g" % tol)
        return cls(rates[:, 0])

    @classmethod
    def identity(cls, n_products: int) -> "WWMatrix":
        return cls(np.ones(n_products))


def complete_ww_from_reference(v: Sequence[float]) -> WWMatrix:
    """Build the unique consistent matrix with ``rates[i][j] = v[i] / v[j]``."""
    return WWMatrix(np.asarray(v, dtype=float))


@dataclass(frozen=True)
class GaugeTransform:
    """Per-product change of units ``n^i -> scale[i] * n^i``."""

    scale: np.ndarray

    def __post_init__(self):
        s = _frozen(self.scale)
        if s.ndim != 1 or np.any(~np.isfinite(s)) or np.any(s <= 0):
            raise DomainError("gauge scale factors must be finite and > 0")
        object.__setattr__(self, "scale", s)

    def inverse(self) -> "GaugeTransform":
        return GaugeTransform(1.0 / self.scale)

    def apply_inventory(self, n) -> np.ndarray:
        return np.asarray(n, dtype=float) * self.scale

    def apply_reference(self, v) -> np.ndarray:
        # rates[i][j] -> phi_i rates[i][j] / phi_j, hence v_i -> phi_i v_i / phi_0
        v = np.asarray(v, dtype=float)
        return v * self.scale / self.scale[0]

    def apply_ww(self, ww: WWMatrix) -> WWMatrix:
        return WWMatrix(self.apply_reference(ww.reference))

    def apply_rate(self, rate: float, i: int, j: int) -> float:
        """Transform a scalar rate quoted as units of ``i`` per unit of ``j``."""
        return rate * self.scale[i] / self.scale[j]


@dataclass(frozen=True)
class EconomyState:
    """All agents' inventories and w-w reference vectors at one time step."""

    inventories: np.ndarray
    ww: np.ndarray
    step: int = 0

    def __post_init__(self):
        n = _frozen(self.inventories)
        v = _frozen(self.ww)
        if n.ndim != 2 or n.shape[0] < 1 or n.shape[1] < 2:
            raise DomainError("inventories must have shape (N >= 1, P >= 2)")
        if v.shape != n.shape:
            raise DomainError("w-w reference array must match inventories shape %s" % (n.shape,))
        if np.any(~np.isfinite(n)) or np.any(n <= 0):
            raise DomainError("inventories must be finite and strictly positive")
        if np.any(~np.isfinite(v)) or np.any(v <= 0):
            raise DomainError("w-w reference entries must be finite and strictly positive")
        object.__setattr__(self, "inventories", n)
        object.__setattr__(self, "ww", v)
        object.__setattr__(self, "step", int(self.step))

    @property
    def n_agents(self) -> int:
        return self.inventories.shape[0]

    @property
    def n_products(self) -> int:
        return self.inventories.shape[1]

    def totals(self) -> np.ndarray:
        return self.inventories.sum(axis=0)

    def agent_ww(self, a: int) -> WWMatrix:
        return WWMatrix(self.ww[a])

    def rates(self, i: int, j: int) -> np.ndarray:
        """Every agent's ``rates[i][j]``."""
        return self.ww[:, i] / self.ww[:, j]

    def replace(self, inventories=None, ww=None, step=None) -> "EconomyState":
        return EconomyState(
            self.inventories if inventories is None else inventories,
            self.ww if ww is None else ww,
            self.step if step is None else step,
        )


def gauge_transform(state: EconomyState, g: GaugeTransform) -> EconomyState:
    if g.scale.size != state.n_products:
        raise DomainError("gauge has %d factors, state has %d products" % (g.scale.size, state.n_products))
    return EconomyState(
        state.inventories * g.scale[None, :],
        state.ww * (g.scale / g.scale[0])[None, :],
        state.step,
    )


# -- snapshot CSV -----------------------------------------------------------

def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def snapshot_header(n_products: int) -> list[str]:
    return (["step", "agent"]
            + ["n_%d" % i for i in range(n_products)]
            + ["v_%d" % i for i in range(n_products)])


def snapshot_rows(state: EconomyState) -> Iterable[list[str]]:
    for a in range(state.n_agents):
        yield ([str(state.step), str(a)]
               + [fmt_float(x) for x in state.inventories[a]]
               + [fmt_float(x) for x in state.ww[a]])


def write_snapshots(states: Iterable[EconomyState], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    header_written = False
    for s in states:
        if not header_written:
            writer.writerow(snapshot_header(s.n_products))
            header_written = True
        writer.writerows(snapshot_rows(s))


def read_snapshots(fh) -> list[EconomyState]:
    """Parse snapshot CSV text back into states, ordered by step."""
    if isinstance(fh, str):
        fh = io.StringIO(fh)
    reader = csv.reader(fh)
    header = next(reader)
    p = (len(header) - 2) // 2
    if header != snapshot_header(p):
        raise DomainError("unexpected snapshot header: %s" % header)
    by_step: dict[int, list] = {}
    for row in reader:
        step = int(row[0])
        by_step.setdefault(step, []).append(row)
    out = []
    for step in sorted(by_step):
        rows = sorted(by_step[step], key=lambda r: int(r[1]))
        n = np.array([[float(x) for x in r[2:2 + p]] for r in rows])
        v = np.array([[float(x) for x in r[2 + p:]] for r in rows])
        out.append(EconomyState(n, v, step))
    return out
