"""Hot batch kernels with a numba path and a pure-numpy fallback.

The backend is picked once at import: numba when it imports cleanly, unless
``FLOWECON_DISABLE_NUMBA=1`` is set. ``set_backend`` switches at runtime
(benchmarks and tests use it). Results agree between backends to rounding;
bit-for-bit reproducibility is guaranteed only within one backend.
"""

import os

from . import _numpy

try:
    from . import _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

EXECUTED, NO_GAIN, N_MIN_BREACH, COEFFICIENT = 0, 1, 2, 3

_BACKENDS = {"numpy": _numpy}
if _numba is not None:
    _BACKENDS["numba"] = _numba

_disabled = os.environ.get("FLOWECON_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")
_active = _BACKENDS["numba"] if ("numba" in _BACKENDS and not _disabled) else _numpy


def available_backends():
    return sorted(_BACKENDS)


def backend() -> str:
    return "numba" if _active is _numba else "numpy"


def set_backend(name: str) -> str:
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError("unknown kernel backend %r (have %s)" % (name, available_backends()))
    prev = backend()
    _active = _BACKENDS[name]
    return prev


product_pairs = _numpy.product_pairs


def ces_derivatives(n, w, nu):
    return _active.ces_derivatives(n, w, nu)


def barter_choice(g, h, n, ia, ib, forced):
    return _active.barter_choice(g, h, n, ia, ib, forced)


def metabolism_choice(g, h, n, proc_in, proc_rate, proc_out, allowed):
    return _active.metabolism_choice(g, h, n, proc_in, proc_rate, proc_out, allowed)


def transport_j(g, h, i, j):
    return _active.transport_j(g, h, i, j)
