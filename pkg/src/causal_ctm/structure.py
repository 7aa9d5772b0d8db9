"""Bipartite causal dependency graphs and their estimation from samples."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyInput, InvalidParameter
from .factored_mdp import (
    FactoredTransitionModel,
    assignment_array,
    check_enumerable,
    dense_shape_check,
)
from .independence import EmpiricalJoint, TestVerdict, independence_test, l1_to_product_of_marginals


@dataclass(frozen=True)
class CausalGraph:
    """Directed edges ``(z, j)`` from input feature ``X[z]`` to next-state feature ``Y[j]``.

    Inputs are indexed state features first, then action features, so
    ``z`` ranges over ``[0, d_S + d_A)`` and ``j`` over ``[0, d_S)``.
    """

    d_S: int
    d_A: int
    n: int
    edges: frozenset = frozenset()
    max_parents: int | None = None

    def __post_init__(self):
        if self.d_S < 1 or self.d_A < 1 or self.n < 2:
            raise InvalidParameter("graph dimensions must satisfy d_S, d_A >= 1 and n >= 2")
        edges = frozenset((int(z), int(j)) for z, j in self.edges)
        for z, j in edges:
            if not (0 <= z < self.d_S + self.d_A and 0 <= j < self.d_S):
                raise DimensionMismatch(f"edge {(z, j)} outside the declared dimensions")
        object.__setattr__(self, "edges", edges)
        if self.max_parents is not None and self.max_in_degree() > self.max_parents:
            raise InvalidParameter(
                f"in-degree {self.max_in_degree()} exceeds the sparsity bound {self.max_parents}"
            )

    @property
    def dims(self) -> tuple:
        return (self.d_S, self.d_A, self.n)

    def parents(self, j: int) -> tuple:
        return tuple(sorted(z for z, jj in self.edges if jj == j))

    def scopes(self) -> tuple:
        return tuple(self.parents(j) for j in range(self.d_S))

    def max_in_degree(self) -> int:
        return max((len(self.parents(j)) for j in range(self.d_S)), default=0)

    def sorted_edges(self) -> list:
        return sorted(self.edges, key=lambda e: (e[1], e[0]))

    def with_edges(self, edges: Iterable) -> "CausalGraph":
        return CausalGraph(self.d_S, self.d_A, self.n, frozenset(edges))

    def to_dot(self, name: str = "G") -> str:
        lines = [f"digraph {name} {{"]
        for z in range(self.d_S + self.d_A):
            lines.append(f"  X{z};")
        for j in range(self.d_S):
            lines.append(f"  Y{j};")
        for z, j in self.sorted_edges():
            lines.append(f"  X{z} -> Y{j};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "d_S": self.d_S,
            "d_A": self.d_A,
            "n": self.n,
            "edges": [list(e) for e in self.sorted_edges()],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CausalGraph":
        return cls(doc["d_S"], doc["d_A"], doc["n"], frozenset(tuple(e) for e in doc["edges"]))

    @classmethod
    def from_model(cls, model: FactoredTransitionModel) -> "CausalGraph":
        edges = {(z, j) for j, scope in enumerate(model.scopes) for z in scope}
        return cls(model.d_S, model.d_A, model.n, frozenset(edges))


def _check_same_dims(graphs: Sequence[CausalGraph]) -> None:
    dims = {g.dims for g in graphs}
    if len(dims) > 1:
        raise DimensionMismatch(f"graphs with differing dimensions: {sorted(dims)}")


def intersect_graphs(graphs: Sequence[CausalGraph]) -> CausalGraph:
    graphs = list(graphs)
    if not graphs:
        raise EmptyInput("cannot intersect zero graphs")
    _check_same_dims(graphs)
    edges = frozenset.intersection(*(g.edges for g in graphs))
    return graphs[0].with_edges(edges)


def graph_edit_distance(g1: CausalGraph, g2: CausalGraph) -> int:
    """Edge symmetric difference; node sets are fixed by the dimensions."""
    _check_same_dims([g1, g2])
    return len(g1.edges ^ g2.edges)


def exact_pair_joints(model, d_S: int | None = None, d_A: int | None = None, n: int | None = None) -> np.ndarray:
    """Exact joints of (X[z], Y[j]) under uniform X, shape ``(d_in, d_S, n, n)``.

    ``model`` may be a :class:`FactoredTransitionModel` or anything with a
    ``feature_table(j)`` method returning P(Y[j] | x) over every full x.
    """
    d_S = model.d_S if d_S is None else d_S
    d_in = model.d_in if hasattr(model, "d_in") else d_S + d_A
    n = model.n if n is None else n
    check_enumerable(n**d_in)
    X = assignment_array(d_in, n)
    w = 1.0 / X.shape[0]
    out = np.zeros((d_in, d_S, n, n))
    for j in range(d_S):
        table = model.feature_table(j)
        for z in range(d_in):
            for a in range(n):
                out[z, j, a] = table[X[:, z] == a].sum(axis=0) * w
    return out


def exact_dependence(model) -> np.ndarray:
    """L1 distance to the product of marginals for every pair, shape ``(d_in, d_S)``."""
    joints = exact_pair_joints(model)
    pa = joints.sum(axis=3, keepdims=True)
    pb = joints.sum(axis=2, keepdims=True)
    return np.abs(joints - pa * pb).sum(axis=(2, 3))


def epsilon_dependency_subgraph(model: FactoredTransitionModel, eps: float) -> CausalGraph:
    dense_shape_check(model.state_space, model.action_space)
    dep = exact_dependence(model)
    edges = {(z, j) for z in range(dep.shape[0]) for j in range(dep.shape[1]) if dep[z, j] >= eps}
    if eps <= 0:
        # eps = 0 admits every pair; keep only those with any dependence at all
        edges = {(z, j) for z, j in edges if dep[z, j] > 1e-15}
    return CausalGraph(model.d_S, model.d_A, model.n, frozenset(edges))


@dataclass(frozen=True)
class StructureReport:
    graph: CausalGraph
    verdicts: dict = field(default_factory=dict)
    samples: int = 0

    def statistic(self, z: int, j: int) -> float:
        return self.verdicts[(z, j)].statistic

    def to_dict(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "samples": self.samples,
            "tests": [
                {"z": z, "j": j, "statistic": v.statistic, "threshold": v.threshold, "dependent": v.dependent}
                for (z, j), v in sorted(self.verdicts.items(), key=lambda kv: (kv[0][1], kv[0][0]))
            ],
        }


def _dims_of(env) -> tuple:
    model = getattr(env, "model", env)
    return model.d_S, model.d_A, model.n


def draw_uniform_inputs(d_in: int, n: int, K: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, n, size=(K, d_in), dtype=np.int64)


def estimate_structure(env, K: int, eps: float, rng: np.random.Generator) -> StructureReport:
    """Test every (X[z], Y[j]) pair for dependence on one batch of K uniform-input samples."""
    if K < 1:
        raise InvalidParameter(f"sample count must be >= 1, got {K}")
    d_S, d_A, n = _dims_of(env)
    d_in = d_S + d_A
    X = draw_uniform_inputs(d_in, n, K, rng)
    Y = env.sample_batch(X, rng)
    verdicts: dict[tuple, TestVerdict] = {}
    for j in range(d_S):
        for z in range(d_in):
            joint = EmpiricalJoint.from_samples(X[:, z], Y[:, j], n)
            verdicts[(z, j)] = independence_test(joint, eps)
    edges = frozenset(e for e, v in verdicts.items() if v.dependent)
    return StructureReport(CausalGraph(d_S, d_A, n, edges), verdicts, K)


__all__ = [
    "CausalGraph",
    "StructureReport",
    "intersect_graphs",
    "graph_edit_distance",
    "epsilon_dependency_subgraph",
    "exact_dependence",
    "exact_pair_joints",
    "estimate_structure",
    "l1_to_product_of_marginals",
]
