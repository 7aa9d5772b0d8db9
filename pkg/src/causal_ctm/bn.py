"""Parameter estimation for a Bayesian network with a fixed bipartite structure.

The generative model pins the parents ``X[Z_j]`` of each next-state feature to
every possible assignment in turn and draws ``K' = ceil(K / (d_S n^Z))``
samples of ``Y[j]`` per assignment. Inputs outside the scope are drawn
uniformly at random.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatch, InvalidParameter
from .factored_mdp import (
    FactoredTransitionModel,
    FactoredSpace,
    as_matrix,
    assignment_array,
)
from .structure import CausalGraph


def per_cell_budget(K: int, d_S: int, n: int, Z: int) -> int:
    if K < 1 or d_S < 1 or n < 2 or Z < 0:
        raise InvalidParameter(f"invalid budget inputs K={K}, d_S={d_S}, n={n}, Z={Z}")
    return -(-K // (d_S * n**Z))


def _sampler_dims(sampler) -> tuple:
    model = getattr(sampler, "model", sampler)
    return model.d_S, model.d_A, model.n


def cell_rng(base: int, j: int, cell: int) -> np.random.Generator:
    return np.random.default_rng([base, j, cell])


def estimate_bn(sampler, graph: CausalGraph, K: int, rng: np.random.Generator, Z: int | None = None) -> FactoredTransitionModel:
    """Count-based CPTs over ``graph``'s scopes.

    ``sampler`` needs ``sample_batch(X, rng)`` and the model dimensions
    (``d_S``, ``d_A``, ``n``), directly or through a ``model`` attribute.
    ``Z`` defaults to the graph's largest in-degree. Each (feature, parent
    assignment) cell draws from its own stream seeded by
    ``(base, j, cell)`` where ``base`` is taken from ``rng``.
    """
    d_S, d_A, n = _sampler_dims(sampler)
    if graph.dims != (d_S, d_A, n):
        raise DimensionMismatch(f"graph dims {graph.dims} differ from sampler dims {(d_S, d_A, n)}")
    Z = graph.max_in_degree() if Z is None else Z
    k_cell = per_cell_budget(K, d_S, n, Z)
    base = int(rng.integers(0, 2**63))
    d_in = d_S + d_A
    scopes = graph.scopes()
    cpts = []
    used = 0
    for j, scope in enumerate(scopes):
        parents = assignment_array(len(scope), n)
        counts = np.zeros((parents.shape[0], n), dtype=np.int64)
        for cell, x in enumerate(parents):
            crng = cell_rng(base, j, cell)
            X = crng.integers(0, n, size=(k_cell, d_in), dtype=np.int64)
            X[:, list(scope)] = x
            y = sampler.sample_batch(X, crng)[:, j]
            counts[cell] = np.bincount(y, minlength=n)
            used += k_cell
        cpts.append(counts / k_cell)
    return FactoredTransitionModel(
        FactoredSpace(d_S, n),
        FactoredSpace(d_A, n),
        scopes,
        tuple(cpts),
        meta={"K": int(K), "K_cell": int(k_cell), "Z": int(Z), "seed": base, "samples_used": int(used)},
    )


def bn_l1_error(estimate, truth) -> float:
    """sup over inputs of the row L1 distance between two transition models."""
    if isinstance(estimate, FactoredTransitionModel) and isinstance(truth, FactoredTransitionModel):
        if not estimate.same_spaces(truth):
            raise DimensionMismatch("models defined over different spaces")
    A, B = as_matrix(estimate), as_matrix(truth)
    if A.shape != B.shape:
        raise DimensionMismatch(f"model shapes differ: {A.shape} vs {B.shape}")
    return float(np.abs(A - B).sum(axis=1).max())


def factor_l1_bound(estimate: FactoredTransitionModel, truth: FactoredTransitionModel) -> float:
    """sum_j max_x ||P_hat_j(.|x) - P_j(.|x)||_1, an upper bound on bn_l1_error."""
    if not estimate.same_spaces(truth):
        raise DimensionMismatch("models defined over different spaces")
    total = 0.0
    for j in range(truth.d_S):
        total += float(np.abs(estimate.feature_table(j) - truth.feature_table(j)).sum(axis=1).max())
    return total


def bn_sample_complexity(eps: float, delta: float, d_S: int, n: int, Z: int) -> int:
    """Total samples 2 d_S^3 n^(3Z+1) ln(2 d_S n^Z / delta) / eps^2 for a sup-L1 error below eps."""
    if eps <= 0 or not (0 < delta < 1):
        raise InvalidParameter("eps must be positive and delta in (0, 1)")
    return math.ceil(2 * d_S**3 * n ** (3 * Z + 1) * math.log(2 * d_S * n**Z / delta) / eps**2)
