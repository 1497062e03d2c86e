import os
import subprocess
import sys

import numpy as np
import pytest

from flowecon import kernels
from flowecon.core import WWMatrix
from flowecon.operations import Agent, best_barter_pair
from flowecon.utility import SatisfactionIndex, UtilityParams

pytestmark = pytest.mark.skipif("numba" not in kernels.available_backends(), reason="numba missing")


@pytest.fixture
def both():
    prev = kernels.backend()

    def call(name, *args):
        out = []
        for b in ("numpy", "numba"):
            kernels.set_backend(b)
            out.append(getattr(kernels, name)(*args))
        return out

    yield call
    kernels.set_backend(prev)


def _inputs(rng, N=40, P=4, nu=0.5):
    n = rng.uniform(0.2, 3.0, (N, P))
    n[0, 1] = 2e-12  # near the floor to exercise breach handling
    w = np.c_[np.ones(N), rng.uniform(0.5, 2.0, (N, P - 1))]
    return n, w, nu


def _close(a, b):
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-300)


def test_derivatives_parity(both, rng):
    n, w, nu = _inputs(rng)
    _close(*both("ces_derivatives", n, w, nu))


def test_barter_choice_parity(both, rng):
    n, w, nu = _inputs(rng)
    g, h = kernels.ces_derivatives(n, w, nu)
    perm = rng.permutation(n.shape[0])
    ia, ib = perm[0::2], perm[1::2]
    forced = np.full(ia.size, -1)
    forced[::3] = rng.integers(0, 6, forced[::3].size)
    a, b = both("barter_choice", g, h, n, ia, ib, forced)
    for x, y in zip(a[:2] + a[5:], b[:2] + b[5:]):
        np.testing.assert_array_equal(x, y)
    _close(a[2:5], b[2:5])


def test_metabolism_choice_parity(both, rng):
    n, w, nu = _inputs(rng, P=3)
    g, h = kernels.ces_derivatives(n, w, nu)
    proc_in = np.array([[0, -1], [1, -1], [0, 2]])
    proc_rate = np.array([[0.5, 0.0], [0.7, 0.0], [0.2, 0.3]])
    proc_out = np.array([1, 2, 1])
    allowed = rng.random((n.shape[0], 3)) < 0.7
    a, b = both("metabolism_choice", g, h, n, proc_in, proc_rate, proc_out, allowed)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[3], b[3])
    _close(a[1:3], b[1:3])


def test_transport_j_parity(both, rng):
    n, w, nu = _inputs(rng)
    g, h = kernels.ces_derivatives(n, w, nu)
    _close(*both("transport_j", g, h, 0, 2))


@pytest.mark.parametrize("name", ["numpy", "numba"])
def test_batch_matches_scalar_operation(name, rng):
    prev = kernels.set_backend(name)
    try:
        n, w, nu = _inputs(rng, N=20, P=3)
        n[0, 1] = 1.0
        g, h = kernels.ces_derivatives(n, w, nu)
        ia, ib = np.arange(0, 20, 2), np.arange(1, 20, 2)
        pi, pj, dni, dnj, gain, status, _ = kernels.barter_choice(g, h, n, ia, ib, np.full(10, -1))
        idx = SatisfactionIndex(UtilityParams(nu))
        for k in range(10):
            # CES weights are rates[0][j], so the reference vector is 1 / w
            a = Agent(n[ia[k]], WWMatrix(1.0 / w[ia[k]]), idx)
            b = Agent(n[ib[k]], WWMatrix(1.0 / w[ib[k]]), idx)
            i, j, f = best_barter_pair(a, b)
            assert f.executed == (status[k] == kernels.EXECUTED)
            if f.executed:
                assert (i, j) == (pi[k], pj[k])
                assert f.deltas[0, i] == pytest.approx(dni[k], rel=1e-10)
                assert f.deltas[0, j] == pytest.approx(dnj[k], rel=1e-10)
    finally:
        kernels.set_backend(prev)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


def test_env_flag_selects_numpy():
    env = dict(os.environ, FLOWECON_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "import flowecon.kernels as k; print(k.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env.pop("FLOWECON_DISABLE_NUMBA")
    out = subprocess.run([sys.executable, "-c", "import flowecon.kernels as k; print(k.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numba"
