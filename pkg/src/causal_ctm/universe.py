"""Synthetic universes: the wellness domain and a general linear-Gaussian generator.

Every next-state feature is a discretized Gaussian whose mean is an affine
function of the state-action features. Discretization puts the Gaussian mass
of ``(-inf, 0.5]`` on value 0, ``(k - 0.5, k + 0.5]`` on value ``k`` and
``(n - 1.5, inf)`` on value ``n - 1``, so every CPT is exact.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .errors import DivisionByZeroSupport, InvalidParameter, SpecInfeasible
from .factored_mdp import (
    Environment,
    FactoredSpace,
    FactoredTransitionModel,
    assignment_array,
)
from .structure import CausalGraph

WELLNESS_STATES = ("A", "W")
WELLNESS_ACTIONS = ("P", "S", "D", "C", "St")
WELLNESS_FEATURES = WELLNESS_STATES + WELLNESS_ACTIONS


def gaussian_bin_cpt(mu, sigma: float, n: int) -> np.ndarray:
    """Gaussian mass of each half-integer bin; ``mu`` may be a scalar or an array."""
    if not sigma > 0:
        raise InvalidParameter(f"sigma must be positive, got {sigma}")
    if n < 2:
        raise InvalidParameter(f"arity must be >= 2, got {n}")
    mu = np.asarray(mu, dtype=float)
    edges = (np.arange(n - 1) + 0.5 - mu[..., None]) / sigma  # (..., n-1)
    lower = ndtr(edges)  # P(value below each edge)
    upper = ndtr(-edges)  # P(value above each edge), accurate in the upper tail
    out = np.empty(mu.shape + (n,))
    out[..., 0] = lower[..., 0]
    out[..., -1] = upper[..., -1]
    for k in range(1, n - 1):
        # difference of whichever tail is smaller keeps relative precision
        lo_diff = lower[..., k] - lower[..., k - 1]
        up_diff = upper[..., k - 1] - upper[..., k]
        out[..., k] = np.where(edges[..., k - 1] > 0, up_diff, lo_diff)
    return out


@dataclass(frozen=True)
class LinearGaussianSpec:
    """mean_j = intercept_j + sum_z coefficients[j, z] * x[z]; zero coefficients mark absent edges."""

    intercepts: tuple
    coefficients: tuple
    sigma: float = 0.1

    def __post_init__(self):
        coefs = np.asarray(self.coefficients, dtype=float)
        if coefs.ndim != 2 or coefs.shape[0] != len(self.intercepts):
            raise InvalidParameter("coefficients must be a (d_S, d_S + d_A) matrix")
        if coefs.shape[1] < coefs.shape[0] + 1:
            raise InvalidParameter("coefficient rows need one entry per state and action feature")
        if not self.sigma > 0:
            raise InvalidParameter(f"sigma must be positive, got {self.sigma}")
        object.__setattr__(self, "intercepts", tuple(float(v) for v in self.intercepts))
        object.__setattr__(self, "coefficients", tuple(tuple(float(v) for v in r) for r in coefs))

    @property
    def coef_array(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=float)

    @property
    def d_S(self) -> int:
        return len(self.intercepts)

    @property
    def d_in(self) -> int:
        return len(self.coefficients[0])

    def graph(self, n: int) -> CausalGraph:
        c = self.coef_array
        edges = {(z, j) for j in range(c.shape[0]) for z in range(c.shape[1]) if c[j, z] != 0}
        return CausalGraph(self.d_S, self.d_in - self.d_S, n, frozenset(edges))

    def perturbed(self, noise: np.ndarray) -> "LinearGaussianSpec":
        return replace(self, coefficients=tuple(map(tuple, self.coef_array + noise)))


def linear_gaussian_model(spec: LinearGaussianSpec, n: int, max_parents: int | None = None) -> FactoredTransitionModel:
    """Factored model whose scopes are the nonzero-coefficient patterns of ``spec``."""
    coefs = spec.coef_array
    d_S, d_in = coefs.shape
    scopes, cpts = [], []
    for j in range(d_S):
        scope = tuple(int(z) for z in np.flatnonzero(coefs[j]))
        parents = assignment_array(len(scope), n)
        mu = spec.intercepts[j] + parents @ coefs[j, list(scope)] if scope else np.array([spec.intercepts[j]])
        scopes.append(scope)
        cpts.append(gaussian_bin_cpt(np.atleast_1d(mu), spec.sigma, n))
    return FactoredTransitionModel(
        FactoredSpace(d_S, n), FactoredSpace(d_in - d_S, n), tuple(scopes), tuple(cpts), max_parents
    )


def wellness_causal_spec() -> LinearGaussianSpec:
    # feature order: A, W | P, S, D, C, St
    return LinearGaussianSpec(
        intercepts=(-0.8, 1.0),
        coefficients=(
            (1.0, 0.0, 0.0, 0.5, 0.2, 0.0, 0.8),
            (0.0, 1.0, -0.5, 0.0, -0.5, 0.0, 0.0),
        ),
        sigma=0.1,
    )


WELLNESS_CAUSAL_EDGES = frozenset({(0, 0), (4, 0), (3, 0), (6, 0), (1, 1), (4, 1), (2, 1)})



@dataclass(frozen=True)
class UniverseSpec:
    """Linear-Gaussian causal model plus per-environment coefficient noise.

    ``edge_threshold`` sets which dependencies count as edges of an
    environment's ground-truth graph; ``margin`` keeps every causal edge at
    least that far above the threshold in every environment and requires each
    non-causal pair to fall at least that far below it in some environment.
    With ``mirrored`` set, environments come in pairs whose per-feature
    conditionals average exactly to the causal model.
    """

    causal: LinearGaussianSpec
    n: int = 3
    noise_scale: float = 0.1
    M: int = 3
    seed: int = 0
    Z: int | None = None
    mirrored: bool = False
    edge_threshold: float = 0.05
    margin: float = 0.0
    max_rounds: int = 200

    def __post_init__(self):
        if self.n < 2:
            raise InvalidParameter(f"arity must be >= 2, got {self.n}")
        if self.M < 1:
            raise InvalidParameter(f"class size must be >= 1, got {self.M}")
        if self.noise_scale < 0:
            raise InvalidParameter("noise scale must be nonnegative")

    @property
    def d_S(self) -> int:
        return self.causal.d_S

    @property
    def d_A(self) -> int:
        return self.causal.d_in - self.causal.d_S

    def to_dict(self) -> dict:
        return {
            "causal": {
                "intercepts": list(self.causal.intercepts),
                "coefficients": [list(r) for r in self.causal.coefficients],
                "sigma": self.causal.sigma,
            },
            "n": self.n,
            "noise_scale": self.noise_scale,
            "M": self.M,
            "seed": self.seed,
            "Z": self.Z,
            "mirrored": self.mirrored,
            "edge_threshold": self.edge_threshold,
            "margin": self.margin,
            "max_rounds": self.max_rounds,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "UniverseSpec":
        doc = dict(doc)
        causal = doc.pop("causal")
        if causal == "wellness":
            causal = wellness_causal_spec()
        else:
            causal = LinearGaussianSpec(
                tuple(causal["intercepts"]), tuple(map(tuple, causal["coefficients"])), causal.get("sigma", 0.1)
            )
        return cls(causal=causal, **doc)


def wellness_spec(M: int = 3, seed: int = 0, **overrides) -> UniverseSpec:
    params = dict(causal=wellness_causal_spec(), n=3, noise_scale=0.1, M=M, seed=seed, Z=4,
                  edge_threshold=0.05, margin=0.015)
    params.update(overrides)
    return UniverseSpec(**params)


def _full_scope_model(tables: Sequence[np.ndarray], d_S: int, d_A: int, n: int) -> FactoredTransitionModel:
    full = tuple(range(d_S + d_A))
    return FactoredTransitionModel(FactoredSpace(d_S, n), FactoredSpace(d_A, n), (full,) * d_S, tuple(tables))


def mirrored_pair(causal_model: FactoredTransitionModel, target: FactoredTransitionModel) -> tuple:
    """Two models P_G + t D and P_G - t D with D = target - P_G per feature.

    ``t`` is the largest step in ``[0, 1]`` keeping both rows nonnegative,
    chosen row by row, so the pair averages exactly to the causal factor.
    """
    plus, minus = [], []
    for j in range(causal_model.d_S):
        ref = causal_model.feature_table(j)
        diff = target.feature_table(j) - ref
        with np.errstate(divide="ignore", invalid="ignore"):
            room = np.where(np.abs(diff) > 0, ref / np.abs(diff), np.inf)
        t = np.minimum(1.0, room.min(axis=1))[:, None]
        plus.append(np.clip(ref + t * diff, 0.0, None))
        minus.append(np.clip(ref - t * diff, 0.0, None))
    d_S, d_A, n = causal_model.d_S, causal_model.d_A, causal_model.n
    return _full_scope_model(plus, d_S, d_A, n), _full_scope_model(minus, d_S, d_A, n)


def _draw_environment_models(spec: UniverseSpec, causal_model, rng) -> list:
    shape = (spec.d_S, spec.causal.d_in)
    if spec.noise_scale == 0:
        return [causal_model] * spec.M
    if not spec.mirrored:
        return [
            linear_gaussian_model(spec.causal.perturbed(rng.normal(0.0, spec.noise_scale, size=shape)), spec.n)
            for _ in range(spec.M)
        ]
    models = []
    for _ in range(spec.M // 2):
        target = linear_gaussian_model(spec.causal.perturbed(rng.normal(0.0, spec.noise_scale, size=shape)), spec.n)
        models.extend(mirrored_pair(causal_model, target))
    if spec.M % 2:
        models.append(causal_model)
    return models


def _robustly_diverse(deps: Sequence[np.ndarray], causal: CausalGraph, thr: float, margin: float) -> bool:
    for z in range(deps[0].shape[0]):
        for j in range(deps[0].shape[1]):
            vals = [d[z, j] for d in deps]
            if (z, j) in causal.edges:
                if min(vals) < thr + margin:
                    return False
            elif min(vals) > thr - margin:
                return False
    return True


def random_universe(spec: UniverseSpec):
    """Build a class whose causal structure is the nonzero-coefficient pattern of ``spec.causal``.

    Environments are redrawn from the seed stream until the class is diverse
    at ``edge_threshold`` (with ``margin``); raises SpecInfeasible after
    ``max_rounds`` attempts or when the pattern violates the declared Z.
    """
    from .pipeline import EnvironmentClass, evenness_gap, evenness_residual, lambda_sufficiency
    from .structure import exact_dependence

    n = spec.n
    graph = spec.causal.graph(n)
    if spec.Z is not None and graph.max_in_degree() > spec.Z:
        raise SpecInfeasible(
            f"causal pattern has in-degree {graph.max_in_degree()}, above the declared Z={spec.Z}"
        )
    graph = CausalGraph(graph.d_S, graph.d_A, n, graph.edges, spec.Z)
    causal_model = linear_gaussian_model(spec.causal, n, spec.Z)
    mu = uniform_initial(spec.d_S, n)
    rng = np.random.default_rng([spec.seed, 0])
    for attempt in range(spec.max_rounds):
        models = _draw_environment_models(spec, causal_model, rng)
        deps = [exact_dependence(m) for m in models]
        if _robustly_diverse(deps, graph, spec.edge_threshold, spec.margin):
            break
    else:
        raise SpecInfeasible(f"no diverse class found in {spec.max_rounds} rounds")
    envs = tuple(
        Environment(i, m, _graph_at(d, graph, spec.edge_threshold), mu) for i, (m, d) in enumerate(zip(models, deps))
    )
    klass = EnvironmentClass(envs, graph, causal_model, mu, meta={"spec": spec.to_dict(), "rounds": attempt + 1})
    klass.meta["lambda"] = lambda_sufficiency(klass, causal_model)
    klass.meta["evenness_gap"] = evenness_gap(klass, causal_model).tolist()
    try:
        klass.meta["evenness_residual"] = evenness_residual(klass, causal_model).tolist()
    except DivisionByZeroSupport:
        klass.meta["evenness_residual"] = None
    return klass


def _graph_at(dep: np.ndarray, like: CausalGraph, thr: float) -> CausalGraph:
    edges = {(z, j) for z in range(dep.shape[0]) for j in range(dep.shape[1]) if dep[z, j] >= thr}
    return CausalGraph(like.d_S, like.d_A, like.n, frozenset(edges))


def build_wellness_universe(M: int = 3, seed: int = 0, **overrides):
    """Wellness class with its causal model and causal graph: ``(class, P_G, G)``."""
    klass = random_universe(wellness_spec(M, seed, **overrides))
    return klass, klass.causal_model, klass.causal_graph


def held_out_environment(spec: UniverseSpec, index: int = 0) -> Environment:
    """An environment of the same universe drawn from a stream disjoint from the class."""
    rng = np.random.default_rng([spec.seed, 1, index])
    causal_model = linear_gaussian_model(spec.causal, spec.n, spec.Z)
    if spec.noise_scale == 0:
        model = causal_model
    else:
        noise = rng.normal(0.0, spec.noise_scale, size=(spec.d_S, spec.causal.d_in))
        model = linear_gaussian_model(spec.causal.perturbed(noise), spec.n)
    return Environment(-1 - index, model, None, uniform_initial(spec.d_S, spec.n))


def uniform_initial(d_S: int, n: int) -> np.ndarray:
    return np.full(n**d_S, 1.0 / n**d_S)


def class_fingerprint(klass) -> str:
    h = hashlib.sha256()
    for env in klass.environments:
        h.update(json.dumps(env.model.to_dict(), sort_keys=True).encode())
    return h.hexdigest()


def save_class(klass, directory) -> None:
    import os

    os.makedirs(directory, exist_ok=True)
    files = []
    for env in klass.environments:
        name = f"env_{env.id}.json"
        with open(os.path.join(directory, name), "w") as f:
            json.dump({"model": env.model.to_dict(), "true_graph": env.true_graph.to_dict() if env.true_graph else None}, f)
        files.append(name)
    if klass.causal_model is not None:
        with open(os.path.join(directory, "causal_model.json"), "w") as f:
            json.dump(klass.causal_model.to_dict(), f)
    if klass.causal_graph is not None:
        with open(os.path.join(directory, "causal_graph.dot"), "w") as f:
            f.write(klass.causal_graph.to_dot("G"))
    manifest = {
        "environments": files,
        "initial_distribution": None if klass.initial_distribution is None else klass.initial_distribution.tolist(),
        "causal_graph": klass.causal_graph.to_dict() if klass.causal_graph else None,
        "fingerprint": class_fingerprint(klass),
        **{k: v for k, v in klass.meta.items()},
    }
    with open(os.path.join(directory, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)


def load_class(directory):
    import os

    from .pipeline import EnvironmentClass

    with open(os.path.join(directory, "manifest.json")) as f:
        manifest = json.load(f)
    mu = manifest.get("initial_distribution")
    envs = []
    for i, name in enumerate(manifest["environments"]):
        with open(os.path.join(directory, name)) as f:
            doc = json.load(f)
        g = CausalGraph.from_dict(doc["true_graph"]) if doc.get("true_graph") else None
        envs.append(Environment(i, FactoredTransitionModel.from_dict(doc["model"]), g, mu))
    causal_model = None
    path = os.path.join(directory, "causal_model.json")
    if os.path.exists(path):
        with open(path) as f:
            causal_model = FactoredTransitionModel.from_dict(json.load(f))
    graph = CausalGraph.from_dict(manifest["causal_graph"]) if manifest.get("causal_graph") else None
    meta = {k: manifest[k] for k in ("spec", "lambda", "evenness_gap", "evenness_residual", "rounds") if k in manifest}
    return EnvironmentClass(tuple(envs), graph, causal_model, mu, meta)
