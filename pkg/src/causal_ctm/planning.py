"""Exact finite-horizon planning on enumerated spaces.

Steps are 0-indexed here: ``V[h]`` for ``h`` in ``0..H`` with ``V[H] = 0``,
so ``V[0]`` is the value at the first step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidParameter
from .factored_mdp import FactoredSpace, TabularTransitionModel, assignment_array, to_tabular


@dataclass(frozen=True, eq=False)
class PlanningTask:
    reward: np.ndarray  # (num_states, num_actions), values in [0, 1]
    horizon: int

    def __post_init__(self):
        r = np.array(self.reward, dtype=float)
        if r.ndim != 2:
            raise InvalidParameter("reward must be a (states, actions) table")
        if np.any(r < 0) or np.any(r > 1):
            raise InvalidParameter("rewards must lie in [0, 1]")
        if self.horizon < 1:
            raise InvalidParameter(f"horizon must be >= 1, got {self.horizon}")
        r.setflags(write=False)
        object.__setattr__(self, "reward", r)


@dataclass(frozen=True, eq=False)
class Policy:
    actions: np.ndarray  # (H, num_states) action indices

    def __post_init__(self):
        a = np.array(self.actions, dtype=np.int64)
        if a.ndim != 2:
            raise InvalidParameter("policy must be an (H, states) array of action indices")
        a.setflags(write=False)
        object.__setattr__(self, "actions", a)

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]

    def to_dict(self) -> dict:
        return {"actions": self.actions.tolist()}

    @classmethod
    def from_dict(cls, doc) -> "Policy":
        return cls(np.array(doc["actions"]))


@dataclass(frozen=True, eq=False)
class ValueTable:
    values: np.ndarray  # (H + 1, num_states)

    def initial(self, mu) -> float:
        return float(np.dot(mu, self.values[0]))

    def to_dict(self) -> dict:
        return {"values": self.values.tolist()}


def _tabular(model) -> TabularTransitionModel:
    return to_tabular(model)


def _check(tab: TabularTransitionModel, task: PlanningTask) -> None:
    if task.reward.shape != (tab.num_states, tab.num_actions):
        raise DimensionMismatch(
            f"reward shape {task.reward.shape} does not match model ({tab.num_states}, {tab.num_actions})"
        )


def value_iteration(model, task: PlanningTask) -> tuple[Policy, ValueTable]:
    tab = _tabular(model)
    _check(tab, task)
    H, S = task.horizon, tab.num_states
    V = np.zeros((H + 1, S))
    pi = np.zeros((H, S), dtype=np.int64)
    for h in range(H - 1, -1, -1):
        Q = task.reward + tab.probs @ V[h + 1]
        pi[h] = np.argmax(Q, axis=1)  # first maximal index
        V[h] = Q[np.arange(S), pi[h]]
    return Policy(pi), ValueTable(V)


def policy_values(model, task: PlanningTask, policy: Policy) -> ValueTable:
    tab = _tabular(model)
    _check(tab, task)
    if policy.actions.shape != (task.horizon, tab.num_states):
        raise DimensionMismatch("policy shape does not match horizon and state count")
    H, S = task.horizon, tab.num_states
    idx = np.arange(S)
    V = np.zeros((H + 1, S))
    for h in range(H - 1, -1, -1):
        a = policy.actions[h]
        V[h] = task.reward[idx, a] + tab.probs[idx, a] @ V[h + 1]
    return ValueTable(V)


def evaluate_policy(model, task: PlanningTask, policy: Policy, mu) -> float:
    return policy_values(model, task, policy).initial(mu)


def optimal_value(model, task: PlanningTask, mu) -> float:
    return value_iteration(model, task)[1].initial(mu)


def suboptimality_gap(true_model, task: PlanningTask, mu, policy: Policy) -> float:
    """V*_1 - V^pi_1 on ``true_model``; may be slightly negative from rounding."""
    return optimal_value(true_model, task, mu) - evaluate_policy(true_model, task, policy, mu)


def epsilon_lambda_bound(lam: float, H: int, d_S: int, n: int, Z: int) -> float:
    if lam < 0 or H < 1 or d_S < 1 or n < 2 or Z < 0:
        raise InvalidParameter("invalid inputs to the sufficiency bound")
    return 2.0 * lam * H**3 * d_S * n ** (2 * Z + 1)


def epsilon_lambda_bound_tabular(lam: float, S: int, A: int, H: int) -> float:
    if lam < 0 or H < 1 or S < 1 or A < 1:
        raise InvalidParameter("invalid inputs to the sufficiency bound")
    return 2.0 * lam * S * A * H**3


def required_model_accuracy(eps: float, H: int, n: int, Z: int) -> float:
    """Model accuracy eps / (2 H^3 n^(Z+1)) that yields planning error eps."""
    if eps <= 0 or H < 1 or n < 2 or Z < 0:
        raise InvalidParameter("invalid inputs")
    return eps / (2 * H**3 * n ** (Z + 1))


def goal_feature_reward(state_space: FactoredSpace, num_actions: int, feature: int, value: int) -> np.ndarray:
    """Reward 1 in every state whose ``feature`` equals ``value``, for every action."""
    if not (0 <= feature < state_space.d and 0 <= value < state_space.n):
        raise InvalidParameter(f"goal ({feature}, {value}) outside the state space")
    states = assignment_array(state_space.d, state_space.n)
    hit = (states[:, feature] == value).astype(float)
    return np.repeat(hit[:, None], num_actions, axis=1)


def simulation_bound(model_a, model_b, H: int) -> float:
    """H^2 * sup-L1 distance: bounds |V^pi_a - V^pi_b| at the first step for rewards in [0, 1]."""
    a, b = _tabular(model_a), _tabular(model_b)
    return H * H * float(np.abs(a.matrix - b.matrix).sum(axis=1).max())


__all__ = [
    "PlanningTask",
    "Policy",
    "ValueTable",
    "value_iteration",
    "policy_values",
    "evaluate_policy",
    "optimal_value",
    "suboptimality_gap",
    "epsilon_lambda_bound",
    "epsilon_lambda_bound_tabular",
    "required_model_accuracy",
    "goal_feature_reward",
    "simulation_bound",
]
