"""Discrete factored state/action spaces and transition models.

A state-action input ``x`` is the concatenation of a state vector (``d_S``
features) and an action vector (``d_A`` features), every feature taking
values in ``[0, n)``. A next state ``y`` has ``d_S`` features. Enumerations
are lexicographic with the first feature most significant, so the flat
index of ``x`` is ``state_index * n**d_A + action_index``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EnumerationTooLarge, InvalidParameter

ENUMERATION_LIMIT = 10**8
ROW_TOL = 1e-9


@dataclass(frozen=True)
class FactoredSpace:
    d: int
    n: int

    def __post_init__(self):
        if self.d < 1:
            raise InvalidParameter(f"feature count must be >= 1, got {self.d}")
        if self.n < 2:
            raise InvalidParameter(f"arity must be >= 2, got {self.n}")

    @property
    def size(self) -> int:
        return self.n**self.d

    def index(self, values: Sequence[int]) -> int:
        idx = 0
        for v in values:
            idx = idx * self.n + int(v)
        return idx

    def vector(self, index: int) -> "FeatureVector":
        vals = []
        for _ in range(self.d):
            index, r = divmod(index, self.n)
            vals.append(r)
        return FeatureVector(tuple(reversed(vals)), self)


@dataclass(frozen=True)
class FeatureVector:
    values: tuple
    space: FactoredSpace

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if len(self.values) != self.space.d:
            raise DimensionMismatch(
                f"vector of length {len(self.values)} in a {self.space.d}-feature space"
            )
        if any(v < 0 or v >= self.space.n for v in self.values):
            raise DimensionMismatch(f"values {self.values} outside [0, {self.space.n})")

    def __getitem__(self, i):
        return self.values[i]

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def project(self, scope: Sequence[int]) -> tuple:
        return tuple(self.values[z] for z in scope)

    def concat(self, other: "FeatureVector") -> "FeatureVector":
        if other.space.n != self.space.n:
            raise DimensionMismatch("cannot concatenate vectors of different arity")
        return FeatureVector(
            self.values + other.values, FactoredSpace(self.space.d + other.space.d, self.space.n)
        )


def check_enumerable(count: int, limit: int = ENUMERATION_LIMIT) -> None:
    if count > limit:
        raise EnumerationTooLarge(f"{count} entries exceed the enumeration limit {limit}")


def enumerate_assignments(space: FactoredSpace, limit: int = ENUMERATION_LIMIT) -> list[FeatureVector]:
    check_enumerable(space.size, limit)
    return [FeatureVector(v, space) for v in itertools.product(range(space.n), repeat=space.d)]


def assignment_array(d: int, n: int) -> np.ndarray:
    """All ``n**d`` assignments as an int array of shape ``(n**d, d)``, lexicographic."""
    check_enumerable(n**d)
    if d == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((n,) * d).reshape(d, -1).T
    return grids.astype(np.int64)


def scope_row_index(X: np.ndarray, scope: Sequence[int], n: int) -> np.ndarray:
    """Flat CPT row index of ``X[:, scope]`` for a batch of inputs."""
    idx = np.zeros(X.shape[0], dtype=np.int64)
    for z in scope:
        idx = idx * n + X[:, z]
    return idx


def inverse_cdf(rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Categorical draws by inverse CDF over the stored column order."""
    cdf = np.cumsum(rows, axis=-1)
    out = (u[:, None] >= cdf).sum(axis=-1)
    return np.minimum(out, rows.shape[-1] - 1)


def _validate_rows(table: np.ndarray, tol: float, what: str) -> None:
    if np.any(table < -tol):
        raise InvalidParameter(f"{what}: negative probability")
    sums = table.sum(axis=-1)
    bad = np.abs(sums - 1.0) > tol
    if np.any(bad):
        raise InvalidParameter(f"{what}: row sums deviate from 1 (max error {np.abs(sums - 1).max():.3g})")


@dataclass(frozen=True, eq=False)
class FactoredTransitionModel:
    """P(Y|X) = prod_j P_j(Y[j] | X[Z_j]), each factor a CPT over scope Z_j.

    ``cpts[j]`` has shape ``(n**len(scopes[j]), n)``; row ``r`` is the
    distribution of ``Y[j]`` given the parent assignment whose lexicographic
    index is ``r``.
    """

    state_space: FactoredSpace
    action_space: FactoredSpace
    scopes: tuple
    cpts: tuple
    max_parents: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.state_space.n != self.action_space.n:
            raise InvalidParameter("state and action features must share one arity")
        n, d_in = self.n, self.d_in
        scopes = tuple(tuple(sorted(int(z) for z in s)) for s in self.scopes)
        if len(scopes) != self.d_S or len(self.cpts) != self.d_S:
            raise DimensionMismatch(f"expected {self.d_S} scopes and CPTs")
        cpts = []
        for j, (scope, cpt) in enumerate(zip(scopes, self.cpts)):
            if len(set(scope)) != len(scope) or any(z < 0 or z >= d_in for z in scope):
                raise DimensionMismatch(f"scope {scope} of feature {j} invalid for {d_in} inputs")
            if self.max_parents is not None and len(scope) > self.max_parents:
                raise InvalidParameter(
                    f"feature {j} has {len(scope)} parents, above the sparsity bound {self.max_parents}"
                )
            arr = np.array(cpt, dtype=float)
            if arr.shape != (n ** len(scope), n):
                raise DimensionMismatch(
                    f"CPT {j} has shape {arr.shape}, expected {(n ** len(scope), n)}"
                )
            _validate_rows(arr, ROW_TOL, f"CPT {j}")
            arr.setflags(write=False)
            cpts.append(arr)
        object.__setattr__(self, "scopes", scopes)
        object.__setattr__(self, "cpts", tuple(cpts))

    @property
    def n(self) -> int:
        return self.state_space.n

    @property
    def d_S(self) -> int:
        return self.state_space.d

    @property
    def d_A(self) -> int:
        return self.action_space.d

    @property
    def d_in(self) -> int:
        return self.d_S + self.d_A

    @property
    def input_space(self) -> FactoredSpace:
        return FactoredSpace(self.d_in, self.n)

    def same_spaces(self, other) -> bool:
        return self.state_space == other.state_space and self.action_space == other.action_space

    def _check_x(self, x) -> tuple:
        vals = tuple(x.values) if isinstance(x, FeatureVector) else tuple(int(v) for v in x)
        if len(vals) != self.d_in or any(v < 0 or v >= self.n for v in vals):
            raise DimensionMismatch(f"input {vals} does not conform to {self.d_in} features in [0,{self.n})")
        return vals

    def _check_y(self, y) -> tuple:
        vals = tuple(y.values) if isinstance(y, FeatureVector) else tuple(int(v) for v in y)
        if len(vals) != self.d_S or any(v < 0 or v >= self.n for v in vals):
            raise DimensionMismatch(f"output {vals} does not conform to {self.d_S} features in [0,{self.n})")
        return vals

    def row(self, j: int, x) -> np.ndarray:
        """Distribution of Y[j] given the full input x."""
        vals = self._check_x(x)
        r = 0
        for z in self.scopes[j]:
            r = r * self.n + vals[z]
        return self.cpts[j][r]

    def sample_batch(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """One next state per row of ``X``; one uniform per (row, feature), feature-major."""
        X = np.asarray(X, dtype=np.int64)
        if X.ndim != 2 or X.shape[1] != self.d_in:
            raise DimensionMismatch(f"batch shape {X.shape} incompatible with {self.d_in} inputs")
        u = rng.random((self.d_S, X.shape[0]))
        Y = np.empty((X.shape[0], self.d_S), dtype=np.int64)
        for j in range(self.d_S):
            rows = self.cpts[j][scope_row_index(X, self.scopes[j], self.n)]
            Y[:, j] = inverse_cdf(rows, u[j])
        return Y

    def feature_batch(self, j: int, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        X = np.asarray(X, dtype=np.int64)
        rows = self.cpts[j][scope_row_index(X, self.scopes[j], self.n)]
        return inverse_cdf(rows, rng.random(X.shape[0]))

    def feature_table(self, j: int) -> np.ndarray:
        """Dense ``(n**d_in, n)`` table of P(Y[j] | x) over every full input x."""
        X = assignment_array(self.d_in, self.n)
        return self.cpts[j][scope_row_index(X, self.scopes[j], self.n)]

    def to_dict(self) -> dict:
        return {
            "state_space": {"d": self.d_S, "n": self.n},
            "action_space": {"d": self.d_A, "n": self.n},
            "scopes": [list(s) for s in self.scopes],
            "cpts": [c.tolist() for c in self.cpts],
            **({"max_parents": self.max_parents} if self.max_parents is not None else {}),
            **({"meta": self.meta} if self.meta else {}),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FactoredTransitionModel":
        return cls(
            state_space=FactoredSpace(**doc["state_space"]),
            action_space=FactoredSpace(**doc["action_space"]),
            scopes=tuple(tuple(s) for s in doc["scopes"]),
            cpts=tuple(np.array(c, dtype=float) for c in doc["cpts"]),
            max_parents=doc.get("max_parents"),
            meta=dict(doc.get("meta", {})),
        )


@dataclass(frozen=True, eq=False)
class TabularTransitionModel:
    """Dense P(s' | s, a) with shape ``(num_states, num_actions, num_states)``."""

    probs: np.ndarray
    state_space: FactoredSpace | None = None
    action_space: FactoredSpace | None = None

    def __post_init__(self):
        arr = np.array(self.probs, dtype=float)
        if arr.ndim != 3 or arr.shape[0] != arr.shape[2]:
            raise DimensionMismatch(f"tabular model needs shape (S, A, S), got {arr.shape}")
        _validate_rows(arr, ROW_TOL, "tabular model")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @property
    def num_states(self) -> int:
        return self.probs.shape[0]

    @property
    def num_actions(self) -> int:
        return self.probs.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        """Rows indexed by flat state-action ``s * A + a``."""
        return self.probs.reshape(-1, self.num_states)

    def sample_batch(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Works on flat ``(state, action)`` index pairs when no factored spaces are attached."""
        X = np.asarray(X, dtype=np.int64)
        if self.state_space is not None:
            s = scope_row_index(X, range(self.state_space.d), self.state_space.n)
            a = scope_row_index(X, range(self.state_space.d, X.shape[1]), self.state_space.n)
        else:
            s, a = X[:, 0], X[:, 1]
        nxt = inverse_cdf(self.probs[s, a], rng.random(X.shape[0]))
        if self.state_space is None:
            return nxt[:, None]
        return assignment_array(self.state_space.d, self.state_space.n)[nxt]


def dense_shape_check(state_space: FactoredSpace, action_space: FactoredSpace) -> None:
    check_enumerable(state_space.size * state_space.size * action_space.size)


def transition_prob(model: FactoredTransitionModel, x, y) -> float:
    xv = model._check_x(x)
    yv = model._check_y(y)
    p = 1.0
    for j in range(model.d_S):
        p *= float(model.row(j, xv)[yv[j]])
    return p


def sample_transition(model: FactoredTransitionModel, x, rng: np.random.Generator) -> FeatureVector:
    xv = np.array([model._check_x(x)], dtype=np.int64)
    return FeatureVector(tuple(model.sample_batch(xv, rng)[0]), model.state_space)


def dense_matrix(model: FactoredTransitionModel) -> np.ndarray:
    """``(n**d_in, n**d_S)`` matrix of P(y|x); factors multiplied in increasing j."""
    dense_shape_check(model.state_space, model.action_space)
    Ycodes = assignment_array(model.d_S, model.n)
    out = np.ones((model.n**model.d_in, Ycodes.shape[0]))
    for j in range(model.d_S):
        out = out * model.feature_table(j)[:, Ycodes[:, j]]
    return out


def to_tabular(model) -> TabularTransitionModel:
    if isinstance(model, TabularTransitionModel):
        return model
    mat = dense_matrix(model)
    S, A = model.state_space.size, model.action_space.size
    return TabularTransitionModel(mat.reshape(S, A, S), model.state_space, model.action_space)


def as_matrix(model) -> np.ndarray:
    if isinstance(model, TabularTransitionModel):
        return model.matrix
    return dense_matrix(model)


def sup_l1_distance(p, q) -> float:
    """max_x sum_y |p(y|x) - q(y|x)|."""
    if isinstance(p, FactoredTransitionModel) and isinstance(q, FactoredTransitionModel):
        if not p.same_spaces(q):
            raise DimensionMismatch("models defined over different spaces")
    P, Q = as_matrix(p), as_matrix(q)
    if P.shape != Q.shape:
        raise DimensionMismatch(f"model shapes differ: {P.shape} vs {Q.shape}")
    return float(np.abs(P - Q).sum(axis=1).max())


@dataclass(frozen=True, eq=False)
class Environment:
    id: int
    model: FactoredTransitionModel | TabularTransitionModel
    true_graph: object = None
    initial_distribution: np.ndarray | None = None

    def __post_init__(self):
        g = self.true_graph
        m = self.model
        if g is not None and isinstance(m, FactoredTransitionModel):
            if (g.d_S, g.d_A, g.n) != (m.d_S, m.d_A, m.n):
                raise DimensionMismatch("true graph dimensions differ from the model's")
        if self.initial_distribution is not None:
            mu = np.asarray(self.initial_distribution, dtype=float)
            if abs(mu.sum() - 1.0) > ROW_TOL or np.any(mu < 0):
                raise InvalidParameter("initial distribution must be a probability vector")
            object.__setattr__(self, "initial_distribution", mu)

    def sample_batch(self, X, rng):
        return self.model.sample_batch(X, rng)


def uniform_cpts(state_space: FactoredSpace, action_space: FactoredSpace, scopes) -> tuple:
    n = state_space.n
    return tuple(np.full((n ** len(s), n), 1.0 / n) for s in scopes)
