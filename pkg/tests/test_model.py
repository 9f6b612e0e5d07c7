import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contract_learn.model import (
    ACCEPT_TOL,
    TIE_TOL,
    AgentSetting,
    Contract,
    InteractionLog,
    MarketParams,
    OutcomeSpace,
    agent_utility,
    batch_principal_utilities,
    best_response,
    build_outcome_space,
    principal_utility,
    simulate_interaction,
)

from conftest import random_stochastic_rows


def oracle_best_response(payments, p_rows, costs, valuations, subscription_fee=0.0):
    """Independent pure-Python scan implementing the documented rule."""
    n_count = len(p_rows)
    deltas = [
        sum(p_rows[n][m] * payments[m] for m in range(len(payments))) - costs[n]
        for n in range(n_count)
    ]
    best = max(deltas)
    if best < -ACCEPT_TOL:
        return 0, deltas[0], False

    def principal_value(n):
        if n == 0:
            return 0.0
        return (
            sum(p_rows[n][m] * (valuations[m] - payments[m]) for m in range(len(payments)))
            - subscription_fee
        )

    tied = [n for n in range(n_count) if deltas[n] >= best - TIE_TOL]
    top = max(principal_value(n) for n in tied)
    chosen = next(n for n in tied if principal_value(n) >= top - TIE_TOL)
    return chosen, deltas[chosen], True


class TestOutcomeSpace:
    def test_two_bucket_quality_range(self):
        space = build_outcome_space(0.9, 1.8, 2, 5e-4)
        assert space.intervals == ((0.9, 1.35), (1.35, 1.8))
        assert np.allclose(space.medians, [1.125, 1.575])
        assert space.valuations[0] == pytest.approx(5.62342e-4, rel=1e-5)
        assert space.valuations[0] == pytest.approx(math.log1p(5e-4 * 1.125))

    def test_single_bucket(self):
        space = build_outcome_space(0.0, 1.0, 1, 2.0)
        assert space.intervals == ((0.0, 1.0),)
        assert space.medians[0] == 0.5

    def test_invalid_range(self):
        with pytest.raises(ValueError, match="invalid range"):
            build_outcome_space(1.0, 1.0, 2, 1.0)

    def test_non_positive_count(self):
        with pytest.raises(ValueError, match="positive"):
            build_outcome_space(0.0, 1.0, 0, 1.0)

    def test_from_valuations_keeps_q(self):
        space = OutcomeSpace.from_valuations([3.0, 1.0, 2.0])
        assert np.allclose(space.valuations, [3.0, 1.0, 2.0])
        assert space.m_count == 3

    def test_medians_must_increase(self):
        with pytest.raises(ValueError, match="increasing"):
            OutcomeSpace(
                2, ((0, 1), (1, 2)), np.array([1.5, 0.5]), np.array([0.1, 0.2]), 1.0
            )

    def test_intervals_must_be_contiguous(self):
        with pytest.raises(ValueError, match="contiguous"):
            OutcomeSpace(
                2, ((0, 1), (1.5, 2)), np.array([0.5, 1.75]), np.array([0.1, 0.2]), 1.0
            )


class TestAgentSetting:
    def test_rejects_non_stochastic_row(self):
        with pytest.raises(ValueError, match="row 1"):
            AgentSetting(2, [[1.0, 0.0], [0.4, 0.5]], [0.0, 0.0])

    def test_rejects_negative_cost(self):
        with pytest.raises(ValueError, match="negative"):
            AgentSetting(1, [[1.0]], [-0.5])

    def test_arrays_are_read_only(self, diag_setting):
        with pytest.raises(ValueError):
            diag_setting.p_matrix[0, 0] = 0.3


class TestMarketParams:
    def test_surplus(self):
        market = MarketParams(1.6e-4, 1.2e-4)
        assert market.subscription_surplus == pytest.approx(4e-5)

    def test_negative_surplus_warns(self):
        with pytest.warns(UserWarning, match="surplus"):
            MarketParams(0.0, 0.1)


class TestInteractionLog:
    def test_rejected_must_log_zero(self):
        with pytest.raises(ValueError, match="zero"):
            InteractionLog(Contract([0.0]), 0.5, -1)

    def test_indicator_domain(self):
        with pytest.raises(ValueError, match=r"\+1 or -1"):
            InteractionLog(Contract([0.0]), 0.0, 0)


class TestAgentUtility:
    def test_hand_example(self, diag_setting, zero_market):
        surplus, total = agent_utility(1, Contract([0.0, 0.6]), diag_setting, zero_market)
        assert surplus == pytest.approx(0.1)
        assert total == pytest.approx(0.1)

    def test_zero_contract_free_action(self, diag_setting):
        market = MarketParams(1.6e-4, 1.2e-4)
        surplus, total = agent_utility(0, Contract.zeros(2), diag_setting, market)
        assert surplus == 0.0
        assert total == pytest.approx(market.subscription_surplus)

    def test_dimension_mismatch(self, diag_setting, zero_market):
        with pytest.raises(ValueError, match="payments"):
            agent_utility(0, Contract([0.0]), diag_setting, zero_market)

    def test_bad_action(self, diag_setting, zero_market):
        with pytest.raises(ValueError, match="out of range"):
            agent_utility(5, Contract.zeros(2), diag_setting, zero_market)


class TestBestResponse:
    def test_strictly_better_action(self, diag_setting, zero_market, unit_outcomes):
        reply = best_response(Contract([0.0, 0.6]), diag_setting, zero_market, unit_outcomes)
        assert reply.action_index == 1
        assert reply.contract_surplus == pytest.approx(0.1)
        assert reply.accepted

    def test_zero_contract_defaults(self, diag_setting, zero_market, unit_outcomes):
        reply = best_response(Contract.zeros(2), diag_setting, zero_market, unit_outcomes)
        assert reply.action_index == 0
        assert reply.contract_surplus == 0.0
        assert reply.accepted

    def test_tie_breaks_for_principal(self, diag_setting, zero_market, unit_outcomes):
        # Both actions yield surplus 0; principal nets 0.5 from action 1 vs 0.
        reply = best_response(Contract([0.0, 0.5]), diag_setting, zero_market, unit_outcomes)
        assert reply.action_index == 1
        assert reply.contract_surplus == pytest.approx(0.0)

    def test_rejection_forces_default(self, unit_outcomes, zero_market):
        setting = AgentSetting(2, [[1.0, 0.0], [0.0, 1.0]], [0.3, 2.0])
        reply = best_response(Contract.zeros(2), setting, zero_market, unit_outcomes)
        assert not reply.accepted
        assert reply.action_index == 0
        assert reply.contract_surplus == pytest.approx(-0.3)

    def test_oracle_identity_random(self, zero_market):
        rng = np.random.default_rng(42)
        for _ in range(300):
            m = int(rng.integers(1, 7))
            n = int(rng.integers(1, 8))
            p = random_stochastic_rows(rng, n, m)
            costs = rng.uniform(0.0, 1.0, n)
            payments = rng.uniform(0.0, 1.0, m)
            q = rng.uniform(0.0, 1.0, m)
            setting = AgentSetting(n, p, costs)
            outcomes = OutcomeSpace.from_valuations(q)
            got = best_response(Contract(payments), setting, zero_market, outcomes)
            want = oracle_best_response(payments, p, costs, q)
            assert (got.action_index, got.accepted) == (want[0], want[2])
            assert got.contract_surplus == pytest.approx(want[1], abs=1e-12)

    @given(st.integers(-8, 8), st.data())
    @settings(max_examples=60, deadline=None)
    def test_argmax_invariant_under_joint_scaling(self, exponent, data):
        # Powers of two keep float scaling exact, so the argmax set is
        # preserved exactly rather than within rounding noise.
        lam = 2.0 ** exponent
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        m, n = int(rng.integers(1, 5)), int(rng.integers(1, 6))
        p = random_stochastic_rows(rng, n, m)
        costs = rng.uniform(0.0, 1.0, n)
        payments = rng.uniform(0.0, 1.0, m)
        q = rng.uniform(0.0, 2.0, m)
        market = MarketParams()
        base = best_response(
            Contract(payments), AgentSetting(n, p, costs), market,
            OutcomeSpace.from_valuations(q),
        )
        scaled = best_response(
            Contract(payments * lam), AgentSetting(n, p, costs * lam), market,
            OutcomeSpace.from_valuations(q),
        )
        assert scaled.accepted == base.accepted
        if base.accepted:
            assert scaled.contract_surplus == pytest.approx(
                base.contract_surplus * lam, rel=1e-9, abs=1e-15
            )

    def test_accept_iff_surplus_nonnegative(self, zero_market):
        rng = np.random.default_rng(7)
        for _ in range(200):
            m, n = int(rng.integers(1, 5)), int(rng.integers(1, 6))
            setting = AgentSetting(
                n, random_stochastic_rows(rng, n, m), rng.uniform(0, 1, n)
            )
            outcomes = OutcomeSpace.from_valuations(rng.uniform(0, 1, m))
            reply = best_response(
                Contract(rng.uniform(0, 1, m)), setting, zero_market, outcomes
            )
            assert reply.accepted == (reply.contract_surplus >= -ACCEPT_TOL)


class TestPrincipalUtility:
    def test_hand_example(self, diag_setting, zero_market, unit_outcomes):
        value = principal_utility(
            Contract([0.0, 0.6]), diag_setting, zero_market, unit_outcomes
        )
        assert value == pytest.approx(0.4)

    def test_zero_contract_is_zero(self, diag_setting, zero_market, unit_outcomes):
        assert principal_utility(
            Contract.zeros(2), diag_setting, zero_market, unit_outcomes
        ) == 0.0

    def test_rejection_is_zero(self, unit_outcomes, zero_market):
        setting = AgentSetting(2, [[1.0, 0.0], [0.0, 1.0]], [0.3, 2.0])
        assert principal_utility(
            Contract.zeros(2), setting, zero_market, unit_outcomes
        ) == 0.0

    def test_zero_exactly_when_rejected_or_default(self, zero_market):
        rng = np.random.default_rng(3)
        for _ in range(200):
            m, n = int(rng.integers(1, 5)), int(rng.integers(2, 6))
            setting = AgentSetting(
                n, random_stochastic_rows(rng, n, m), rng.uniform(0, 1, n)
            )
            outcomes = OutcomeSpace.from_valuations(rng.uniform(0, 3, m))
            contract = Contract(rng.uniform(0, 1, m))
            reply = best_response(contract, setting, zero_market, outcomes)
            value = principal_utility(contract, setting, zero_market, outcomes)
            if not reply.accepted or reply.action_index == 0:
                assert value == 0.0


class TestSimulateInteraction:
    def test_accepted_case(self, diag_setting, zero_market, unit_outcomes):
        log = simulate_interaction(
            Contract([0.0, 0.6]), diag_setting, zero_market, unit_outcomes
        )
        assert (log.principal_utility, log.accepted) == (pytest.approx(0.4), 1)

    def test_rejecting_case(self, unit_outcomes, zero_market):
        setting = AgentSetting(2, [[1.0, 0.0], [0.0, 1.0]], [0.3, 2.0])
        log = simulate_interaction(
            Contract.zeros(2), setting, zero_market, unit_outcomes
        )
        assert (log.principal_utility, log.accepted) == (0.0, -1)

    def test_default_action_accepts_at_zero(self, diag_setting, zero_market, unit_outcomes):
        log = simulate_interaction(
            Contract.zeros(2), diag_setting, zero_market, unit_outcomes
        )
        assert (log.principal_utility, log.accepted) == (0.0, 1)

    def test_sampled_mode_needs_rng(self, diag_setting, zero_market, unit_outcomes):
        with pytest.raises(ValueError, match="rng"):
            simulate_interaction(
                Contract([0.0, 0.6]), diag_setting, zero_market, unit_outcomes,
                sampled=True,
            )

    def test_sampled_mode_draws_outcome(self, zero_market, unit_outcomes):
        setting = AgentSetting(2, [[1.0, 0.0], [0.5, 0.5]], [0.0, 0.1])
        rng = np.random.default_rng(0)
        log = simulate_interaction(
            Contract([0.1, 0.8]), setting, zero_market, unit_outcomes,
            sampled=True, rng=rng,
        )
        # action 1 wins (surplus 0.35 vs 0.1); realized utility is one of the
        # two per-outcome values, not their expectation
        assert log.accepted == 1
        assert log.principal_utility in (pytest.approx(-0.1), pytest.approx(0.2))


class TestBatchUtilities:
    def test_matches_scalar_path(self, zero_market):
        rng = np.random.default_rng(11)
        for _ in range(20):
            m, n = int(rng.integers(1, 4)), int(rng.integers(1, 5))
            setting = AgentSetting(
                n, random_stochastic_rows(rng, n, m), rng.uniform(0, 1, n)
            )
            outcomes = OutcomeSpace.from_valuations(rng.uniform(0, 2, m))
            grid = rng.uniform(0, 1.5, (50, m))
            batched = batch_principal_utilities(grid, setting, zero_market, outcomes)
            for row, value in zip(grid, batched):
                assert value == pytest.approx(
                    principal_utility(Contract(row), setting, zero_market, outcomes),
                    abs=1e-12,
                )
