import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from flowecon.core import (DomainError, EconomyState, GaugeTransform, WWMatrix, complete_ww_from_reference,
                           gauge_transform, read_snapshots, validate_ww_consistency, write_snapshots)

positive = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False, allow_infinity=False)


def vectors(p_min=2, p_max=6):
    return st.integers(p_min, p_max).flatmap(lambda p: arrays(float, p, elements=positive))


def states():
    return st.tuples(st.integers(2, 6), st.integers(2, 4)).flatmap(
        lambda s: st.tuples(arrays(float, s, elements=positive), arrays(float, s, elements=positive)))


class TestConsistency:
    def test_identity_is_consistent(self):
        assert validate_ww_consistency(np.ones((4, 4)))

    def test_reference_construction_is_consistent(self):
        assert validate_ww_consistency(complete_ww_from_reference([1, 2, 4]).rates)

    def test_broken_transitivity(self):
        m = np.ones((3, 3))
        m[0, 1], m[1, 2], m[0, 2] = 2.0, 2.0, 3.0
        m[1, 0], m[2, 1], m[2, 0] = 0.5, 0.5, 1 / 3
        assert not validate_ww_consistency(m)

    def test_broken_reciprocity(self):
        m = np.array([[1.0, 2.0], [0.6, 1.0]])
        assert not validate_ww_consistency(m)

    def test_nonpositive_or_bad_shape(self):
        assert not validate_ww_consistency(np.array([[1.0, -1.0], [-1.0, 1.0]]))
        assert not validate_ww_consistency(np.ones((2, 3)))

    def test_tolerance_is_relative(self):
        m = complete_ww_from_reference([1.0, 1e6, 1e-6]).rates.copy()
        m[1, 2] *= 1 + 1e-11
        assert validate_ww_consistency(m, tol=1e-9)
        assert not validate_ww_consistency(m, tol=1e-12)

    @given(vectors())
    def test_completion_always_consistent(self, v):
        assert validate_ww_consistency(complete_ww_from_reference(v).rates, tol=1e-12)


class TestWWMatrix:
    def test_two_ones(self):
        np.testing.assert_array_equal(complete_ww_from_reference([1, 1]).rates, np.ones((2, 2)))

    def test_direct_ratio(self):
        m = complete_ww_from_reference([2, 1])
        assert m.rate(0, 1) == 2.0 and m.rate(1, 0) == 0.5

    def test_three_products(self):
        r = complete_ww_from_reference([1, 2, 4]).rates
        assert r[0, 2] == pytest.approx(0.25) and r[2, 1] == pytest.approx(2.0)

    def test_diagonal_exactly_one(self):
        r = complete_ww_from_reference([0.1, 3.7, 1e5]).rates
        assert np.all(np.diag(r) == 1.0)

    def test_nonpositive_entry(self):
        with pytest.raises(DomainError):
            complete_ww_from_reference([1.0, 0.0])

    def test_from_rates_roundtrip_and_rejection(self):
        ref = complete_ww_from_reference([1, 3, 0.5])
        np.testing.assert_allclose(WWMatrix.from_rates(ref.rates).rates, ref.rates, rtol=1e-15)
        with pytest.raises(DomainError):
            WWMatrix.from_rates([[1, 2], [2, 1]])

    def test_weights_are_row_zero(self):
        m = complete_ww_from_reference([1, 3, 0.5])
        np.testing.assert_allclose(m.weights(), m.rates[0])

    def test_immutable(self):
        m = complete_ww_from_reference([1, 2])
        with pytest.raises(ValueError):
            m.reference[0] = 5.0


class TestGauge:
    def test_identity_gauge(self):
        s = EconomyState([[1, 2], [3, 4]], [[1, 2], [1, 0.5]])
        t = gauge_transform(s, GaugeTransform([1.0, 1.0]))
        np.testing.assert_array_equal(t.inventories, s.inventories)
        np.testing.assert_array_equal(t.ww, s.ww)

    def test_two_product_law(self):
        s = EconomyState([[1, 2], [3, 4]], [[1, 2], [1, 0.5]], step=7)
        t = gauge_transform(s, GaugeTransform([2.0, 1.0]))
        np.testing.assert_allclose(t.inventories[:, 0], 2 * s.inventories[:, 0])
        np.testing.assert_allclose(t.rates(0, 1), 2 * s.rates(0, 1))
        np.testing.assert_allclose(t.rates(1, 0), 0.5 * s.rates(1, 0))
        assert t.step == 7

    def test_wrong_length(self):
        s = EconomyState([[1, 2], [3, 4]], [[1, 2], [1, 0.5]])
        with pytest.raises(DomainError):
            gauge_transform(s, GaugeTransform([1.0, 2.0, 3.0]))

    def test_bad_scale(self):
        with pytest.raises(DomainError):
            GaugeTransform([1.0, -2.0])

    @given(states(), st.data())
    def test_consistency_preserved_and_invertible(self, nv, data):
        n, v = nv
        s = EconomyState(n, v, 3)
        phi = data.draw(arrays(float, n.shape[1], elements=positive))
        g = GaugeTransform(phi)
        t = gauge_transform(s, g)
        for a in range(t.n_agents):
            assert validate_ww_consistency(t.agent_ww(a).rates)
            np.testing.assert_allclose(t.agent_ww(a).rates,
                                       phi[:, None] * s.agent_ww(a).rates / phi[None, :], rtol=1e-12)
        back = gauge_transform(t, g.inverse())
        np.testing.assert_allclose(back.inventories, s.inventories, rtol=1e-14)
        np.testing.assert_allclose(back.ww, s.ww, rtol=1e-14)

    def test_apply_rate_matches_matrix_law(self):
        g = GaugeTransform([2.0, 5.0, 0.5])
        m = complete_ww_from_reference([1, 3, 0.25])
        out = g.apply_ww(m)
        assert out.rate(1, 2) == pytest.approx(g.apply_rate(m.rate(1, 2), 1, 2))


class TestEconomyState:
    def test_validation(self):
        with pytest.raises(DomainError):
            EconomyState([[1, 0], [1, 1]], [[1, 1], [1, 1]])
        with pytest.raises(DomainError):
            EconomyState([[1, 1], [1, 1]], [[1, 1]])
        with pytest.raises(DomainError):
            EconomyState([[1], [1]], [[1], [1]])
        assert EconomyState([[1, 1]], [[1, 1]]).n_agents == 1  # a lone agent facing a market maker

    def test_totals_and_replace(self):
        s = EconomyState([[1, 2], [3, 4]], [[1, 1], [1, 1]])
        np.testing.assert_array_equal(s.totals(), [4, 6])
        t = s.replace(step=5)
        assert t.step == 5
        np.testing.assert_array_equal(t.inventories, s.inventories)

    def test_snapshot_roundtrip_is_exact(self, rng):
        states_ = [EconomyState(rng.uniform(0.1, 9, (5, 3)), rng.uniform(0.1, 9, (5, 3)), t) for t in range(3)]
        buf = io.StringIO()
        write_snapshots(states_, buf)
        text = buf.getvalue()
        assert text.splitlines()[0] == "step,agent,n_0,n_1,n_2,v_0,v_1,v_2"
        back = read_snapshots(text)
        for a, b in zip(states_, back):
            assert a.step == b.step
            np.testing.assert_array_equal(a.inventories, b.inventories)
            np.testing.assert_array_equal(a.ww, b.ww)
