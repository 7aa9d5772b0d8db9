import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causal_ctm.errors import DimensionMismatch, EmptyInput, InvalidParameter
from causal_ctm.factored_mdp import FactoredSpace, FactoredTransitionModel
from causal_ctm.independence import l1_to_product_of_marginals
from causal_ctm.structure import (
    CausalGraph,
    epsilon_dependency_subgraph,
    estimate_structure,
    exact_dependence,
    graph_edit_distance,
    intersect_graphs,
)
from causal_ctm.universe import WELLNESS_CAUSAL_EDGES

from conftest import all_vectors, brute_force_prob, random_model

ALL_PAIRS = [(z, j) for z in range(3) for j in range(2)]


def G(edges, d_S=2, d_A=1, n=2):
    return CausalGraph(d_S, d_A, n, frozenset(edges))


edge_sets = st.sets(st.sampled_from(ALL_PAIRS))


def test_graph_rejects_out_of_range_edges():
    with pytest.raises(DimensionMismatch):
        G({(3, 0)})
    with pytest.raises(DimensionMismatch):
        G({(0, 2)})


def test_ged_examples():
    e1, e2, e3 = (0, 0), (1, 0), (2, 1)
    assert graph_edit_distance(G({e1, e2}), G({e1, e2})) == 0
    assert graph_edit_distance(G({e1, e2}), G({e2, e3})) == 2
    assert graph_edit_distance(G(set()), G({e1, e2, e3})) == 3


def test_ged_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        graph_edit_distance(G(set()), G(set(), d_A=2))


@settings(max_examples=80)
@given(edge_sets, edge_sets, edge_sets)
def test_ged_is_metric(a, b, c):
    ga, gb, gc = G(a), G(b), G(c)
    assert graph_edit_distance(ga, gb) == graph_edit_distance(gb, ga)
    assert graph_edit_distance(ga, gc) <= graph_edit_distance(ga, gb) + graph_edit_distance(gb, gc)
    assert (graph_edit_distance(ga, gb) == 0) == (a == b)


def test_intersection_examples():
    e1, e2, e3 = (0, 0), (1, 0), (2, 1)
    g = G({e1, e2})
    assert intersect_graphs([g, g]).edges == g.edges
    assert intersect_graphs([G({e1, e2}), G({e2, e3})]).edges == {e2}
    with pytest.raises(EmptyInput):
        intersect_graphs([])
    with pytest.raises(DimensionMismatch):
        intersect_graphs([G(set()), G(set(), n=3)])


@settings(max_examples=80)
@given(edge_sets, edge_sets, edge_sets)
def test_intersection_algebra(a, b, c):
    ga, gb, gc = G(a), G(b), G(c)
    assert intersect_graphs([ga, gb]).edges == intersect_graphs([gb, ga]).edges
    left = intersect_graphs([intersect_graphs([ga, gb]), gc])
    right = intersect_graphs([ga, intersect_graphs([gb, gc])])
    assert left.edges == right.edges == intersect_graphs([ga, gb, gc]).edges
    assert intersect_graphs([ga, ga]).edges == ga.edges


def test_dot_export_stable():
    dot = G({(2, 1), (0, 0)}).to_dot("G")
    lines = [ln.strip() for ln in dot.splitlines()]
    assert "X0 -> Y0;" in lines and "X2 -> Y1;" in lines
    assert lines.index("X0 -> Y0;") < lines.index("X2 -> Y1;")
    for name in ["X0", "X1", "X2", "Y0", "Y1"]:
        assert any(ln.startswith(name) for ln in lines)
    assert dot == G({(0, 0), (2, 1)}).to_dot("G")


def _oracle_dependence(model):
    """Pair joints by summing transition_prob over every input and output."""
    d_in, d_S, n = model.d_S + model.d_A, model.d_S, model.n
    xs, ys = all_vectors(d_in, n), all_vectors(d_S, n)
    dep = np.zeros((d_in, d_S))
    for z, j in itertools.product(range(d_in), range(d_S)):
        joint = np.zeros((n, n))
        for x in xs:
            for y in ys:
                joint[x[z], y[j]] += brute_force_prob(model, x, y) / len(xs)
        dep[z, j] = l1_to_product_of_marginals(joint)
    return dep


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_exact_dependence_matches_enumeration(seed):
    m = random_model(np.random.default_rng(seed), d_S=2, d_A=1, n=3)
    assert np.allclose(exact_dependence(m), _oracle_dependence(m), atol=1e-12)


def test_eps_subgraph_of_constant_model_is_empty():
    m = FactoredTransitionModel(
        FactoredSpace(2, 3), FactoredSpace(1, 3), ((), ()), (np.array([[0.2, 0.3, 0.5]]), np.array([[1 / 3] * 3]))
    )
    for eps in [1e-9, 0.01, 0.5]:
        assert epsilon_dependency_subgraph(m, eps).edges == frozenset()
    assert epsilon_dependency_subgraph(m, 0).edges == frozenset()


def test_eps_zero_is_superset():
    m = random_model(np.random.default_rng(8), d_S=2, d_A=1, n=3)
    g0 = epsilon_dependency_subgraph(m, 0).edges
    for eps in [0.01, 0.1, 0.3]:
        assert epsilon_dependency_subgraph(m, eps).edges <= g0


def test_wellness_eps_subgraph_is_causal_graph(wellness):
    _, causal, graph = wellness
    assert epsilon_dependency_subgraph(causal, 0.05).edges == frozenset(WELLNESS_CAUSAL_EDGES)
    assert graph.edges == frozenset(WELLNESS_CAUSAL_EDGES)


def test_wellness_dependence_fixture(wellness):
    # frozen from the brute-force enumeration in _oracle_dependence
    _, causal, _ = wellness
    dep = exact_dependence(causal)
    assert np.allclose(dep, _oracle_dependence(causal), atol=1e-12)
    assert dep[4, 0] == pytest.approx(0.0929, abs=5e-4)  # D -> A, the weakest causal edge
    assert min(dep[z, j] for z, j in WELLNESS_CAUSAL_EDGES) > 0.05


def test_constant_env_recovers_empty_graph():
    m = FactoredTransitionModel(
        FactoredSpace(2, 2), FactoredSpace(1, 2), ((), ()), (np.array([[0.3, 0.7]]), np.array([[0.5, 0.5]]))
    )
    from causal_ctm.independence import tester_sample_size

    K = tester_sample_size(2, 0.3, 0.1 / 6)
    empties = sum(
        not estimate_structure(m, K, 0.3, np.random.default_rng(s)).graph.edges for s in range(10)
    )
    assert empties >= 9


def test_wellness_structure_recovery(wellness):
    klass, causal, _ = wellness
    eps = 0.1
    for i, env in enumerate(klass.environments):
        report = estimate_structure(env, 20000, eps, np.random.default_rng(100 + i))
        truth = set(epsilon_dependency_subgraph(env.model, eps).edges)
        assert set(WELLNESS_CAUSAL_EDGES) <= set(report.graph.edges)
        # only pairs in the ambiguous band may disagree with the exact subgraph
        dep = exact_dependence(env.model)
        for z, j in set(report.graph.edges) ^ truth:
            assert 0.5 * eps - 0.03 < dep[z, j] < eps + 0.03
        assert len(report.verdicts) == 7 * 2


def test_structure_report_deterministic(wellness):
    env = wellness[0].environments[0]
    a = estimate_structure(env, 3000, 0.1, np.random.default_rng(5)).to_dict()
    b = estimate_structure(env, 3000, 0.1, np.random.default_rng(5)).to_dict()
    assert a == b


def test_structure_rejects_zero_samples(wellness):
    with pytest.raises(InvalidParameter):
        estimate_structure(wellness[1], 0, 0.1, np.random.default_rng(0))


def test_structure_edges_within_dimensions():
    m = random_model(np.random.default_rng(3), d_S=2, d_A=2, n=3)
    g = estimate_structure(m, 500, 0.2, np.random.default_rng(0)).graph
    assert all(0 <= z < 4 and 0 <= j < 2 for z, j in g.edges)
