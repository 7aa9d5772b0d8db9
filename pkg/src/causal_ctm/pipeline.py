"""Causal transition model estimation over a class of environments.

Each environment's dependency graph is estimated from uniform-input samples,
the graphs are intersected, and a Bayesian network over the intersection is
fitted to samples from the uniform mixture of the environments.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .bn import bn_l1_error, estimate_bn
from .errors import (
    DivisionByZeroSupport,
    EmptyInput,
    InvalidParameter,
    MissingGroundTruth,
)
from .factored_mdp import (
    Environment,
    FactoredSpace,
    FactoredTransitionModel,
    TabularTransitionModel,
    as_matrix,
    assignment_array,
    scope_row_index,
    sup_l1_distance,
)
from .structure import CausalGraph, StructureReport, estimate_structure, intersect_graphs


@dataclass(frozen=True, eq=False)
class EnvironmentClass:
    """Ordered environments sharing spaces and initial distribution.

    ``causal_graph`` and ``causal_model`` hold the universe-wide ground truth
    when it is known (synthetic classes).
    """

    environments: tuple
    causal_graph: CausalGraph | None = None
    causal_model: FactoredTransitionModel | None = None
    initial_distribution: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        envs = tuple(self.environments)
        if not envs:
            raise EmptyInput("a class needs at least one environment")
        dims = {_model_dims(e.model) for e in envs}
        if len(dims) != 1:
            raise InvalidParameter("all environments in a class must share their spaces")
        object.__setattr__(self, "environments", envs)
        mu = self.initial_distribution
        if mu is None:
            mu = envs[0].initial_distribution
        if mu is not None:
            mu = np.asarray(mu, dtype=float)
            for e in envs:
                if e.initial_distribution is not None and not np.allclose(e.initial_distribution, mu, atol=0):
                    raise InvalidParameter("environments in a class must share the initial distribution")
        object.__setattr__(self, "initial_distribution", mu)

    @property
    def M(self) -> int:
        return len(self.environments)

    def __len__(self):
        return self.M

    def __iter__(self):
        return iter(self.environments)

    def __getitem__(self, i):
        return self.environments[i]

    @property
    def dims(self) -> tuple:
        return _model_dims(self.environments[0].model)

    @property
    def d_S(self) -> int:
        return self.dims[0]

    @property
    def d_A(self) -> int:
        return self.dims[1]

    @property
    def n(self) -> int:
        return self.dims[2]


def _model_dims(model) -> tuple:
    if isinstance(model, TabularTransitionModel):
        return (model.state_space.d, model.action_space.d, model.state_space.n)
    return (model.d_S, model.d_A, model.n)


# ---------------------------------------------------------------------------
# budgets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Budget:
    k_structure: int
    k_bn: int
    c_structure: float
    c_bn: float
    eps: float
    delta: float
    M: int
    d_S: int
    d_A: int
    n: int
    Z: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def compute_budgets(eps, delta, M, d_S, d_A, n, Z, c_structure=1.0, c_bn=1.0) -> Budget:
    if not eps > 0:
        raise InvalidParameter(f"eps must be positive, got {eps}")
    if not (0 < delta < 1):
        raise InvalidParameter(f"delta must lie in (0, 1), got {delta}")
    if min(M, d_S, d_A, Z) < 1 or n < 2:
        raise InvalidParameter("M, d_S, d_A, Z must be >= 1 and n >= 2")
    if c_structure <= 0 or c_bn <= 0:
        raise InvalidParameter("budget constants must be positive")
    k1 = c_structure * d_S**2 * Z**2 * n * math.log(2 * M * d_S**2 * d_A / delta) / eps**2
    k2 = c_bn * d_S**3 * n ** (3 * Z + 1) * math.log(4 * d_S * n**Z / delta) / eps**2
    return Budget(max(1, math.ceil(k1)), max(1, math.ceil(k2)), c_structure, c_bn, eps, delta, M, d_S, d_A, n, Z)


# ---------------------------------------------------------------------------
# mixture sampling
# ---------------------------------------------------------------------------


class MixtureSampler:
    """Draws each query from a uniformly chosen member of the class."""

    def __init__(self, klass: EnvironmentClass):
        self.klass = klass
        self.d_S, self.d_A, self.n = klass.dims

    def sample_batch(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        envs = self.klass.environments
        if len(envs) == 1:
            return envs[0].sample_batch(X, rng)
        X = np.asarray(X, dtype=np.int64)
        which = rng.integers(0, len(envs), size=X.shape[0])
        Y = np.empty((X.shape[0], self.d_S), dtype=np.int64)
        for i, env in enumerate(envs):
            rows = np.flatnonzero(which == i)
            if rows.size:
                Y[rows] = env.sample_batch(X[rows], rng)
        return Y

    def matrix(self) -> np.ndarray:
        return np.mean([as_matrix(e.model) for e in self.klass.environments], axis=0)


def mixture_sampler(klass: EnvironmentClass) -> MixtureSampler:
    return MixtureSampler(klass)


# ---------------------------------------------------------------------------
# end-to-end estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CtmResult:
    graph: CausalGraph
    model: FactoredTransitionModel
    reports: tuple
    samples_structure: int
    samples_bn: int
    budget: Budget | None = None
    structure_eps: float = 0.0
    test_delta: float = 0.0
    seed: int = 0

    @property
    def total_samples(self) -> int:
        return self.samples_structure + self.samples_bn

    def manifest(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "budget": self.budget.to_dict() if self.budget else None,
            "structure_eps": self.structure_eps,
            "test_delta": self.test_delta,
            "seed": self.seed,
            "samples": {
                "structure": self.samples_structure,
                "bn": self.samples_bn,
                "total": self.total_samples,
            },
            "per_environment": [r.to_dict() for r in self.reports],
        }

    def save(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        with open(os.path.join(directory, "graph.dot"), "w") as f:
            f.write(self.graph.to_dot("G_hat"))
        with open(os.path.join(directory, "model.json"), "w") as f:
            json.dump(self.model.to_dict(), f, indent=1)
        with open(os.path.join(directory, "manifest.json"), "w") as f:
            json.dump(self.manifest(), f, indent=1, sort_keys=True)


def estimate_ctm(
    klass: EnvironmentClass,
    eps: float,
    delta: float,
    rng: np.random.Generator,
    c_structure: float = 1.0,
    c_bn: float = 1.0,
    Z: int | None = None,
    k_structure: int | None = None,
    k_bn: int | None = None,
    structure_eps: float | None = None,
) -> CtmResult:
    """Estimate the causal graph and causal transition model of ``klass``.

    Budgets follow :func:`compute_budgets` unless ``k_structure``/``k_bn``
    override them. The structure tests run at threshold ``eps / (3 d_S Z)``
    unless ``structure_eps`` is given. ``Z`` is the assumed sparsity and
    defaults to ``d_S + d_A``.

    Seed schedule: ``s = rng.integers(2**63)``; environment ``i`` is probed
    with ``default_rng([s, 0, i])`` and the mixture with ``default_rng([s, 1])``.
    """
    d_S, d_A, n = klass.dims
    M = klass.M
    Z = d_S + d_A if Z is None else Z
    budget = compute_budgets(eps, delta, M, d_S, d_A, n, Z, c_structure, c_bn)
    k1 = budget.k_structure if k_structure is None else int(k_structure)
    k2 = budget.k_bn if k_bn is None else int(k_bn)
    eps_test = eps / (3 * d_S * Z) if structure_eps is None else structure_eps
    test_delta = delta / (2 * M * d_S**2 * d_A)
    s = int(rng.integers(0, 2**63))
    reports = tuple(
        estimate_structure(env, k1, eps_test, np.random.default_rng([s, 0, i]))
        for i, env in enumerate(klass.environments)
    )
    g_hat = intersect_graphs([r.graph for r in reports])
    model = estimate_bn(MixtureSampler(klass), g_hat, k2, np.random.default_rng([s, 1]))
    return CtmResult(
        graph=g_hat,
        model=model,
        reports=reports,
        samples_structure=M * k1,
        samples_bn=int(model.meta["samples_used"]),
        budget=budget,
        structure_eps=eps_test,
        test_delta=test_delta,
        seed=s,
    )


# ---------------------------------------------------------------------------
# diagnostics for the structural assumptions
# ---------------------------------------------------------------------------


def lambda_sufficiency(klass: EnvironmentClass, causal_model) -> float:
    return max(sup_l1_distance(causal_model, env.model) for env in klass.environments)


def feature_tables(model, j: int) -> np.ndarray:
    """P(Y[j] | x) for every full input x, shape ``(n**d_in, n)``."""
    if isinstance(model, FactoredTransitionModel):
        return model.feature_table(j)
    d_S, _, n = _model_dims(model)
    Ycodes = assignment_array(d_S, n)
    mat = model.matrix
    out = np.zeros((mat.shape[0], n))
    for v in range(n):
        out[:, v] = mat[:, Ycodes[:, j] == v].sum(axis=1)
    return out


def evenness_residual(klass: EnvironmentClass, causal_model: FactoredTransitionModel) -> np.ndarray:
    """Per feature j: max over (x, y) of |mean_i P_i(y|x) / P_G,j(y|x[Z_j]) - 1|."""
    out = np.zeros(causal_model.d_S)
    for j in range(causal_model.d_S):
        ref = causal_model.feature_table(j)
        mean = np.mean([feature_tables(e.model, j) for e in klass.environments], axis=0)
        if np.any((ref == 0) & (mean > 0)):
            raise DivisionByZeroSupport(f"causal factor {j} is zero where the class has mass")
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(ref > 0, mean / np.where(ref > 0, ref, 1.0), 1.0)
        out[j] = float(np.abs(ratio - 1.0).max())
    return out


def joint_evenness_residual(klass: EnvironmentClass, causal_model) -> float:
    """Full-joint variant: max over (x, y) of |mean_i P_i(y|x) / P_G(y|x) - 1|."""
    ref = as_matrix(causal_model)
    mean = np.mean([as_matrix(e.model) for e in klass.environments], axis=0)
    if np.any((ref == 0) & (mean > 0)):
        raise DivisionByZeroSupport("causal model is zero where the class has mass")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(ref > 0, mean / np.where(ref > 0, ref, 1.0), 1.0)
    return float(np.abs(ratio - 1.0).max())


def evenness_gap(klass: EnvironmentClass, causal_model: FactoredTransitionModel) -> np.ndarray:
    """Per feature j: max_x ||mean_i P_i(.|x) - P_G,j(.|x[Z_j])||_1 (L1 form of the evenness residual)."""
    out = np.zeros(causal_model.d_S)
    for j in range(causal_model.d_S):
        mean = np.mean([feature_tables(e.model, j) for e in klass.environments], axis=0)
        out[j] = float(np.abs(mean - causal_model.feature_table(j)).sum(axis=1).max())
    return out


def mixture_restricted_model(klass: EnvironmentClass, graph: CausalGraph) -> FactoredTransitionModel:
    """Exact infinite-sample limit of BN estimation on the class mixture over ``graph``.

    Each CPT row is the mixture's conditional of ``Y[j]`` averaged uniformly
    over the inputs outside the scope.
    """
    d_S, d_A, n = klass.dims
    X = assignment_array(d_S + d_A, n)
    cpts = []
    for j, scope in enumerate(graph.scopes()):
        mean = np.mean([feature_tables(e.model, j) for e in klass.environments], axis=0)
        rows = scope_row_index(X, scope, n)
        size = n ** len(scope)
        acc = np.zeros((size, n))
        np.add.at(acc, rows, mean)
        cpts.append(acc / np.bincount(rows, minlength=size)[:, None])
    return FactoredTransitionModel(FactoredSpace(d_S, n), FactoredSpace(d_A, n), graph.scopes(), tuple(cpts))


@dataclass(frozen=True)
class DiversityVerdict:
    passed: bool
    intersection: CausalGraph
    witness: tuple | None = None


def diversity_check(klass: EnvironmentClass) -> DiversityVerdict:
    graphs = [e.true_graph for e in klass.environments]
    if any(g is None for g in graphs) or klass.causal_graph is None:
        raise MissingGroundTruth("diversity needs ground-truth graphs on the class and every member")
    inter = intersect_graphs(graphs)
    diff = inter.edges ^ klass.causal_graph.edges
    if not diff:
        return DiversityVerdict(True, inter)
    witness = sorted(diff, key=lambda e: (e[1], e[0]))[0]
    return DiversityVerdict(False, inter, witness)


def error_decomposition(estimate: FactoredTransitionModel, klass: EnvironmentClass, graph: CausalGraph, causal_model) -> dict:
    """Total error and its split into sampling error and mixture (evenness) bias."""
    limit = mixture_restricted_model(klass, graph)
    return {
        "total": bn_l1_error(estimate, causal_model),
        "sampling": bn_l1_error(estimate, limit),
        "bias": bn_l1_error(limit, causal_model),
    }
