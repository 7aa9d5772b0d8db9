import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causal_ctm.errors import DimensionMismatch, InvalidParameter
from causal_ctm.factored_mdp import TabularTransitionModel
from causal_ctm.planning import (
    PlanningTask,
    Policy,
    epsilon_lambda_bound,
    epsilon_lambda_bound_tabular,
    evaluate_policy,
    goal_feature_reward,
    optimal_value,
    policy_values,
    simulation_bound,
    suboptimality_gap,
    value_iteration,
)
from causal_ctm.factored_mdp import FactoredSpace

from conftest import brute_force_optimum, random_model


def naive_value(P, r, actions, mu):
    """Forward propagation of the state distribution under a fixed policy."""
    d = np.array(mu, dtype=float)
    total = 0.0
    for h in range(len(actions)):
        nxt = np.zeros_like(d)
        for s in range(len(d)):
            a = actions[h][s]
            total += d[s] * r[s, a]
            nxt += d[s] * P[s, a]
        d = nxt
    return total


def random_instance(rng, S, A):
    P = rng.dirichlet(np.ones(S), size=(S, A))
    r = rng.random((S, A))
    return TabularTransitionModel(P), r


def test_forced_single_state():
    m = TabularTransitionModel(np.ones((1, 2, 1)))
    task = PlanningTask(np.array([[1.0, 0.0]]), 2)
    pi, V = value_iteration(m, task)
    assert V.values[0, 0] == 2
    assert np.all(pi.actions == 0)
    worst = Policy(np.ones((2, 1), dtype=int))
    assert suboptimality_gap(m, task, [1.0], worst) == 2


def test_zero_reward():
    m, _ = random_instance(np.random.default_rng(0), 3, 2)
    task = PlanningTask(np.zeros((3, 2)), 3)
    pi, V = value_iteration(m, task)
    assert np.all(V.values == 0)
    assert np.all(pi.actions == 0)
    assert evaluate_policy(m, task, pi, np.ones(3) / 3) == 0


def test_matches_exhaustive_enumeration():
    m, r = random_instance(np.random.default_rng(1), 4, 3)
    mu = np.ones(4) / 4
    task = PlanningTask(r, 3)
    assert optimal_value(m, task, mu) == pytest.approx(brute_force_optimum(m.probs, r, 3, mu), abs=1e-9)


def test_optimal_policy_consistency():
    m, r = random_instance(np.random.default_rng(2), 5, 2)
    mu = np.random.default_rng(3).dirichlet(np.ones(5))
    task = PlanningTask(r, 4)
    pi, V = value_iteration(m, task)
    assert evaluate_policy(m, task, pi, mu) == pytest.approx(V.initial(mu), abs=1e-12)
    assert evaluate_policy(m, task, pi, mu) == pytest.approx(naive_value(m.probs, r, pi.actions, mu), abs=1e-12)
    assert suboptimality_gap(m, task, mu, pi) == pytest.approx(0, abs=1e-9)


def test_average_over_policies_at_horizon_one():
    m, r = random_instance(np.random.default_rng(4), 2, 2)
    mu = np.array([0.3, 0.7])
    task = PlanningTask(r, 1)
    vals = [evaluate_policy(m, task, Policy(np.array([a])), mu) for a in itertools.product(range(2), repeat=2)]
    assert np.mean(vals) == pytest.approx(float(mu @ r.mean(axis=1)), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 3), st.integers(1, 3))
def test_value_bounds_and_gap_sign(seed, S, A, H):
    rng = np.random.default_rng(seed)
    m, r = random_instance(rng, S, A)
    task = PlanningTask(r, H)
    _, V = value_iteration(m, task)
    for h in range(H + 1):
        assert np.all(V.values[h] >= -1e-12)
        assert np.all(V.values[h] <= H - h + 1e-12)
    pol = Policy(rng.integers(0, A, (H, S)))
    assert suboptimality_gap(m, task, np.ones(S) / S, pol) >= -1e-9


def test_tie_break_ignores_payload_order():
    # actions 0 and 2 are equally good; swapping their next-state rows keeps the policy
    P = np.zeros((2, 3, 2))
    P[:, 0] = [1, 0]
    P[:, 1] = [0.5, 0.5]
    P[:, 2] = [1, 0]
    r = np.array([[1.0, 0.2, 1.0], [0.0, 0.0, 0.0]])
    task = PlanningTask(r, 3)
    pi1, _ = value_iteration(TabularTransitionModel(P), task)
    P2 = P.copy()
    P2[:, [0, 2]] = P[:, [2, 0]]
    pi2, _ = value_iteration(TabularTransitionModel(P2), task)
    assert np.array_equal(pi1.actions, pi2.actions)
    assert np.all(pi1.actions[:, 0] == 0)


def test_bound_formulas():
    assert epsilon_lambda_bound(0, 3, 2, 3, 4) == 0
    assert epsilon_lambda_bound(0.1, 2, 2, 3, 1) == pytest.approx(86.4)
    assert epsilon_lambda_bound_tabular(0.1, 4, 2, 2) == pytest.approx(12.8)
    with pytest.raises(InvalidParameter):
        epsilon_lambda_bound(-0.1, 2, 2, 3, 1)


def test_task_validation():
    with pytest.raises(InvalidParameter):
        PlanningTask(np.array([[1.5]]), 1)
    with pytest.raises(InvalidParameter):
        PlanningTask(np.array([[0.5]]), 0)
    m, _ = random_instance(np.random.default_rng(0), 3, 2)
    with pytest.raises(DimensionMismatch):
        value_iteration(m, PlanningTask(np.zeros((2, 2)), 1))


def test_goal_feature_reward():
    r = goal_feature_reward(FactoredSpace(2, 3), 4, 0, 2)
    assert r.shape == (9, 4)
    assert r[:, 0].tolist() == [0, 0, 0, 0, 0, 0, 1, 1, 1]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4))
def test_simulation_bound(seed, H):
    rng = np.random.default_rng(seed)
    a = random_model(rng, d_S=2, d_A=1, n=2)
    b = random_model(rng, d_S=2, d_A=1, n=2)
    task = PlanningTask(rng.random((4, 2)), H)
    mu = np.ones(4) / 4
    pol = Policy(rng.integers(0, 2, (H, 4)))
    diff = abs(evaluate_policy(a, task, pol, mu) - evaluate_policy(b, task, pol, mu))
    assert diff <= simulation_bound(a, b, H) + 1e-12


def test_factored_and_tabular_agree():
    m = random_model(np.random.default_rng(7), d_S=2, d_A=1, n=3)
    task = PlanningTask(np.random.default_rng(8).random((9, 3)), 3)
    from causal_ctm.factored_mdp import to_tabular

    v1 = value_iteration(m, task)[1].values
    v2 = value_iteration(to_tabular(m), task)[1].values
    assert np.array_equal(v1, v2)
    pol = value_iteration(m, task)[0]
    assert np.allclose(policy_values(m, task, pol).values, v1, atol=1e-12)


def test_policy_round_trip():
    p = Policy(np.array([[0, 2], [1, 1]]))
    assert np.array_equal(Policy.from_dict(p.to_dict()).actions, p.actions)
