import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergochain.chain import (
    Chain,
    StateVector,
    as_state,
    backward_product,
    coordinate_spread,
    step,
    trajectory,
    validate_matrix,
)
from ergochain.errors import (
    DimensionMismatch,
    IndexOutOfRange,
    InvalidParameter,
    NegativeEntry,
    RowSumViolation,
)
from ergochain.models import FiniteRangeSpec, finite_range_chain

from oracles import (
    matrix_power_by_squaring,
    naive_backward_product,
    random_stochastic,
)


class TestValidateMatrix:
    def test_identity_is_valid(self):
        m = validate_matrix([[1.0, 0.0], [0.0, 1.0]])
        assert m.size == 2
        np.testing.assert_array_equal(m.entries, np.eye(2))

    def test_exact_row_sums_are_valid(self):
        m = validate_matrix([[0.5, 0.5], [0.3, 0.7]])
        np.testing.assert_allclose(m.entries.sum(axis=1), 1.0)

    def test_bad_row_sum_rejected(self):
        with pytest.raises(RowSumViolation) as err:
            validate_matrix([[0.6, 0.6], [0.3, 0.7]])
        assert err.value.i == 0
        assert err.value.row_sum == pytest.approx(1.2)

    def test_negative_entry_rejected(self):
        with pytest.raises(NegativeEntry) as err:
            validate_matrix([[1.1, -0.1], [0.5, 0.5]])
        assert (err.value.i, err.value.j) == (0, 1)

    def test_non_square_rejected(self):
        with pytest.raises(DimensionMismatch):
            validate_matrix([[0.5, 0.5]])

    def test_renormalizes_within_tolerance(self):
        drift = 1e-13
        m = validate_matrix([[0.5 + drift, 0.5], [0.25, 0.75]])
        np.testing.assert_array_equal(m.entries.sum(axis=1), [1.0, 1.0])

    def test_rejects_outside_tolerance(self):
        with pytest.raises(RowSumViolation):
            validate_matrix([[0.5 + 1e-10, 0.5], [0.25, 0.75]], tau_row=1e-12)

    def test_entries_are_read_only(self):
        m = validate_matrix([[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            m.entries[0, 0] = 0.5


class TestStep:
    def test_symmetric_average(self):
        a = validate_matrix([[0.5, 0.5], [0.5, 0.5]])
        out = step(as_state([1.0, 0.0]), a)
        np.testing.assert_allclose(out.values, [0.5, 0.5])
        assert out.time_index == 1

    def test_identity_leaves_state(self):
        a = validate_matrix(np.eye(3))
        x = as_state([3.0, -1.0, 7.5], time_index=4)
        out = step(x, a)
        np.testing.assert_array_equal(out.values, x.values)
        assert out.time_index == 5

    def test_uniform_averaging_hand_value(self):
        a = validate_matrix(np.full((3, 3), 1.0 / 3.0))
        out = step(as_state([3.0, 1.0, 2.0]), a)
        np.testing.assert_allclose(out.values, [2.0, 2.0, 2.0])

    def test_dimension_mismatch(self):
        a = validate_matrix(np.eye(3))
        with pytest.raises(DimensionMismatch):
            step(as_state([1.0, 2.0]), a)

    def test_vector_states_updated_coordinatewise(self):
        a = validate_matrix([[0.5, 0.5], [0.25, 0.75]])
        x = np.array([[1.0, 10.0, 100.0], [3.0, 30.0, 300.0]])
        out = step(as_state(x), a)
        for r in range(3):
            np.testing.assert_allclose(out.values[:, r], a.entries @ x[:, r])


class TestBackwardProduct:
    def test_identity_chain(self):
        chain = Chain.from_matrices([np.eye(3)] * 5)
        prod = backward_product(chain, 1, 4)
        np.testing.assert_array_equal(prod.entries, np.eye(3))

    def test_constant_chain_matches_power(self, rng):
        a = random_stochastic(rng, 4)
        chain = Chain.from_matrices([a] * 9)
        prod = backward_product(chain, 2, 9)
        np.testing.assert_allclose(prod.entries,
                                   matrix_power_by_squaring(a, 7), atol=1e-13)

    def test_order_is_latest_leftmost(self, rng):
        a0 = random_stochastic(rng, 3)
        a1 = random_stochastic(rng, 3)
        chain = Chain.from_matrices([a0, a1])
        prod = backward_product(chain, 0, 2)
        np.testing.assert_allclose(prod.entries, a1 @ a0, atol=1e-15)

    def test_matches_naive_oracle(self, rng):
        mats = [random_stochastic(rng, 4) for _ in range(6)]
        chain = Chain.from_matrices(mats)
        for k, n in [(0, 6), (1, 4), (3, 6)]:
            np.testing.assert_allclose(
                backward_product(chain, k, n).entries,
                naive_backward_product(mats, k, n),
                atol=1e-14,
            )

    def test_index_errors(self):
        chain = Chain.from_matrices([np.eye(2)] * 3)
        with pytest.raises(IndexOutOfRange):
            backward_product(chain, 2, 2)
        with pytest.raises(IndexOutOfRange):
            backward_product(chain, 0, 4)
        with pytest.raises(IndexOutOfRange):
            backward_product(chain, -1, 2)

    def test_start_index_offset(self, rng):
        mats = [random_stochastic(rng, 3) for _ in range(4)]
        chain = Chain.from_matrices(mats, start_index=10)
        with pytest.raises(IndexOutOfRange):
            backward_product(chain, 0, 2)
        prod = backward_product(chain, 10, 14)
        np.testing.assert_allclose(prod.entries,
                                   naive_backward_product(mats, 0, 4), atol=1e-14)


class TestTrajectory:
    def test_zero_horizon_returns_initial(self):
        chain = Chain.from_matrices([np.eye(2)])
        out = trajectory(chain, [1.0, 0.0], 0)
        assert len(out) == 1
        np.testing.assert_array_equal(out[0].values, [1.0, 0.0])

    def test_geometric_spread_decay_2x2(self):
        # for [[1-a, a], [b, 1-b]] the gap contracts by exactly 1-a-b per step
        a = validate_matrix([[0.75, 0.25], [0.25, 0.75]])
        chain = Chain.from_matrices([a] * 20)
        states = trajectory(chain, [1.0, 0.0], 20)
        for n, st_ in enumerate(states):
            gap = st_.values[0] - st_.values[1]
            assert gap == pytest.approx(0.5**n, rel=1e-12)

    def test_spread_monotone_contracts(self, rng):
        mats = [random_stochastic(rng, 5) for _ in range(30)]
        chain = Chain.from_matrices(mats)
        states = trajectory(chain, rng.normal(size=5), 30)
        highs = [s.values.max() for s in states]
        lows = [s.values.min() for s in states]
        for n in range(30):
            assert highs[n + 1] <= highs[n] + 1e-12
            assert lows[n + 1] >= lows[n] - 1e-12

    def test_endogenous_krause_all_within_range(self):
        # s=3 brute-force case: everything within R, so every step is a
        # full average with all rates 1/3
        spec = FiniteRangeSpec.krause(1.0)
        x0 = [0.0, 0.1, 0.2]
        chain = finite_range_chain(spec, x0, length=5)
        states = trajectory(chain, None, 5)
        for n in range(5):
            np.testing.assert_allclose(chain.array(n), np.full((3, 3), 1 / 3))
        np.testing.assert_allclose(states[1].values, np.mean(x0))

    def test_endogenous_chain_rejects_other_seed_state(self):
        spec = FiniteRangeSpec.krause(1.0)
        chain = finite_range_chain(spec, [0.0, 0.1], length=3)
        with pytest.raises(InvalidParameter):
            trajectory(chain, [5.0, 6.0], 3)

    def test_exogenous_chain_requires_x0(self):
        chain = Chain.from_matrices([np.eye(2)])
        with pytest.raises(InvalidParameter):
            trajectory(chain, None, 1)


class TestChainPlumbing:
    def test_degenerate_single_agent(self):
        chain = Chain.from_matrices([[[1.0]]] * 4)
        assert chain.size == 1
        prod = backward_product(chain, 0, 4)
        assert prod.entries[0, 0] == 1.0

    def test_rule_chain_is_lazy_and_cached(self):
        calls = []

        def rule(n):
            calls.append(n)
            return np.eye(2)

        chain = Chain.from_rule(rule, length=10)
        chain.array(3)
        assert calls == [0, 1, 2, 3]
        chain.array(2)
        assert calls == [0, 1, 2, 3]

    def test_stacked_shape(self, rng):
        mats = [random_stochastic(rng, 3) for _ in range(6)]
        chain = Chain.from_matrices(mats)
        block = chain.stacked(1, 5)
        assert block.shape == (4, 3, 3)
        np.testing.assert_array_equal(block[0], mats[1])

    def test_endogenous_states_recorded(self):
        spec = FiniteRangeSpec.krause(1.0)
        chain = finite_range_chain(spec, [0.0, 0.4], length=4)
        chain.array(3)
        x1 = chain.state(1)
        np.testing.assert_allclose(x1, [0.2, 0.2])


# --------------------------------------------------------------------------- #
# property-based invariants


random_chains = st.builds(
    lambda s, length, seed: [
        random_stochastic(np.random.default_rng(seed), s) for _ in range(length)
    ],
    st.integers(2, 5),
    st.integers(2, 8),
    st.integers(0, 2**32 - 1),
)


@given(random_chains)
@settings(max_examples=40, deadline=None)
def test_products_stay_row_stochastic(mats):
    chain = Chain.from_matrices(mats)
    prod = backward_product(chain, 0, len(mats))
    sums = prod.entries.sum(axis=1)
    np.testing.assert_allclose(sums, 1.0, atol=1e-9)
    assert (prod.entries >= 0).all()


@given(random_chains, st.data())
@settings(max_examples=40, deadline=None)
def test_product_associativity_split(mats, data):
    chain = Chain.from_matrices(mats)
    n = len(mats)
    m = data.draw(st.integers(1, n - 1))
    left = backward_product(chain, m, n).entries
    right = backward_product(chain, 0, m).entries
    whole = backward_product(chain, 0, n).entries
    np.testing.assert_allclose(whole, left @ right, atol=1e-12)


@given(random_chains, st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_convex_hull_contraction(mats, state_seed):
    chain = Chain.from_matrices(mats)
    s = mats[0].shape[0]
    x0 = np.random.default_rng(state_seed).normal(size=s)
    states = trajectory(chain, x0, len(mats))
    spreads = [coordinate_spread(st_.values) for st_ in states]
    for a, b in zip(spreads, spreads[1:]):
        assert b <= a + 1e-12
