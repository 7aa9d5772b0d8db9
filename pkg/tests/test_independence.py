import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causal_ctm.errors import EmptyJoint, InvalidParameter, OutOfRange
from causal_ctm.independence import (
    EmpiricalJoint,
    independence_test,
    l1_to_product_of_marginals,
    tester_sample_size,
    weissman_bound,
)


def test_accumulate_bookkeeping():
    j = EmpiricalJoint(2).accumulate(0, 0)
    assert j.counts[0, 0] == 1 and j.total == 1
    j.accumulate(0, 0)
    assert j.counts[0, 0] == 2
    k = EmpiricalJoint(2)
    for a, b in [(0, 0), (1, 1), (0, 1)]:
        k.accumulate(a, b)
    assert k.counts.ravel().tolist() == [1, 1, 0, 1]
    assert k.total == 3


def test_accumulate_out_of_range():
    with pytest.raises(OutOfRange):
        EmpiricalJoint(2).accumulate(2, 0)
    with pytest.raises(OutOfRange):
        EmpiricalJoint.from_samples(np.array([0, 3]), np.array([0, 0]), 3)


def test_from_samples_matches_accumulate():
    rng = np.random.default_rng(0)
    a, b = rng.integers(0, 3, 200), rng.integers(0, 3, 200)
    j = EmpiricalJoint(3)
    for x, y in zip(a, b):
        j.accumulate(int(x), int(y))
    assert np.array_equal(EmpiricalJoint.from_samples(a, b, 3).counts, j.counts)


def test_l1_hand_enumerated_values():
    assert l1_to_product_of_marginals(EmpiricalJoint(2, [[4, 4], [4, 4]])) == 0
    assert l1_to_product_of_marginals(EmpiricalJoint(2, [[5, 0], [0, 5]])) == pytest.approx(1.0)
    assert l1_to_product_of_marginals(EmpiricalJoint(3, np.eye(3, dtype=int) * 7)) == pytest.approx(4 / 3)


def test_l1_empty_joint():
    with pytest.raises(EmptyJoint):
        l1_to_product_of_marginals(EmpiricalJoint(2))
    with pytest.raises(EmptyJoint):
        independence_test(EmpiricalJoint(3), 0.1)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 50), min_size=9, max_size=9).filter(lambda c: sum(c) > 0), st.integers(1, 20))
def test_l1_scale_invariant_and_bounded(counts, c):
    base = EmpiricalJoint(3, np.array(counts).reshape(3, 3))
    scaled = EmpiricalJoint(3, np.array(counts).reshape(3, 3) * c)
    s = l1_to_product_of_marginals(base)
    assert 0 <= s <= 2
    assert l1_to_product_of_marginals(scaled) == pytest.approx(s, abs=1e-12)


def test_sample_size_formula():
    assert tester_sample_size(2, 0.5, 0.1) == 4717
    assert tester_sample_size(3, 0.2, 0.05) == 77558
    assert tester_sample_size(2, 0.5, 0.1) == math.ceil(72 * 4 * math.log(60) / 0.25)


def test_sample_size_eps_scaling():
    for n, eps, d in [(2, 0.2, 0.1), (3, 0.1, 0.05), (4, 0.3, 0.01)]:
        k1 = tester_sample_size(n, eps, d)
        k2 = tester_sample_size(n, 2 * eps, d)
        assert abs(k1 / 4 - k2) <= 1


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.floats(0.01, 2.0), st.floats(0.001, 0.99))
def test_sample_size_monotone(n, eps, delta):
    k = tester_sample_size(n, eps, delta)
    assert k >= 1
    assert tester_sample_size(n, min(2.0, eps * 1.5), delta) <= k
    assert tester_sample_size(n, eps, min(0.999, delta * 1.5)) <= k
    assert tester_sample_size(n + 1, eps, delta) >= k


@pytest.mark.parametrize("args", [(2, 0.0, 0.1), (2, 2.5, 0.1), (2, 0.1, 0.0), (2, 0.1, 1.0), (1, 0.1, 0.1)])
def test_sample_size_invalid(args):
    with pytest.raises(InvalidParameter):
        tester_sample_size(*args)


def test_tie_is_dependent():
    joint = EmpiricalJoint(2, [[5, 0], [0, 5]])  # statistic exactly 1.0
    v = independence_test(joint, 2.0)
    assert v.statistic == 1.0 and v.threshold == 1.0
    assert v.dependent and v.verdict == "Dependent"
    assert not independence_test(EmpiricalJoint(2, [[4, 4], [4, 4]]), 0.1).dependent


def _trials(gen, n, K, eps, trials, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(trials):
        a, b = gen(rng, K)
        out.append(independence_test(EmpiricalJoint.from_samples(a, b, n), eps).dependent)
    return np.array(out)


def test_calibration_independent_pair():
    K = tester_sample_size(2, 0.5, 0.1)
    dep = _trials(lambda r, k: (r.integers(0, 2, k), r.integers(0, 2, k)), 2, K, 0.5, 100, 1)
    assert (~dep).sum() >= 90


def test_calibration_correlated_pair():
    K = tester_sample_size(2, 0.5, 0.1)

    def gen(r, k):
        a = r.integers(0, 2, k)
        return a, a.copy()

    dep = _trials(gen, 2, K, 0.5, 100, 2)
    assert dep.sum() >= 90


def test_weissman_bound_formula():
    assert weissman_bound(3, 100, 0.5) == pytest.approx(2 * math.exp(-100 * 0.25 / 6))
