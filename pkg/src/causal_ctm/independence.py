"""Empirical joints over [n] x [n] and a plug-in (eps, delta)-independence tester.

The tester compares the empirical joint with the product of its empirical
marginals in L1 and reports dependence when the distance reaches ``eps / 2``.
Each of the three empirical distributions (joint, two marginals) lands within
``eps / 6`` of its mean in L1 with probability ``1 - delta / 3`` once
``K >= 72 n^2 ln(6 / delta) / eps^2`` (Weissman et al. concentration over a
support of at most ``n^2`` outcomes), which gives both error modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyJoint, InvalidParameter, OutOfRange


class EmpiricalJoint:
    """Count table for pairs ``(a, b)`` with ``a, b`` in ``[0, n)``."""

    def __init__(self, n: int, counts=None):
        if n < 2:
            raise InvalidParameter(f"arity must be >= 2, got {n}")
        self.n = n
        if counts is None:
            self.counts = np.zeros((n, n), dtype=np.int64)
        else:
            counts = np.asarray(counts, dtype=np.int64)
            if counts.shape != (n, n) or np.any(counts < 0):
                raise InvalidParameter("counts must be a nonnegative n x n integer table")
            self.counts = counts.copy()

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_samples(cls, a: np.ndarray, b: np.ndarray, n: int) -> "EmpiricalJoint":
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if a.shape != b.shape:
            raise InvalidParameter("paired sample arrays must have equal length")
        if a.size and (a.min() < 0 or a.max() >= n or b.min() < 0 or b.max() >= n):
            raise OutOfRange(f"sample values outside [0, {n})")
        counts = np.bincount(a * n + b, minlength=n * n).reshape(n, n)
        return cls(n, counts)

    def accumulate(self, a: int, b: int) -> "EmpiricalJoint":
        if not (0 <= a < self.n and 0 <= b < self.n):
            raise OutOfRange(f"({a}, {b}) outside [0, {self.n})^2")
        self.counts[a, b] += 1
        return self

    def frequencies(self) -> np.ndarray:
        total = self.total
        if total < 1:
            raise EmptyJoint("joint holds no samples")
        return self.counts / total

    def __repr__(self):
        return f"EmpiricalJoint(n={self.n}, total={self.total})"


@dataclass(frozen=True)
class TestVerdict:
    dependent: bool
    statistic: float
    threshold: float

    __test__ = False  # keep pytest from collecting this as a test class

    @property
    def verdict(self) -> str:
        return "Dependent" if self.dependent else "Independent"


def l1_to_product_of_marginals(joint) -> float:
    """sum_{a,b} |P(a,b) - P_A(a) P_B(b)| for an EmpiricalJoint or a probability table."""
    p = joint.frequencies() if isinstance(joint, EmpiricalJoint) else np.asarray(joint, dtype=float)
    pa = p.sum(axis=1)
    pb = p.sum(axis=0)
    return float(np.abs(p - np.outer(pa, pb)).sum())


def tester_sample_size(n: int, eps: float, delta: float) -> int:
    if not (0 < eps <= 2):
        raise InvalidParameter(f"eps must lie in (0, 2], got {eps}")
    if not (0 < delta < 1):
        raise InvalidParameter(f"delta must lie in (0, 1), got {delta}")
    if n < 2:
        raise InvalidParameter(f"arity must be >= 2, got {n}")
    return max(1, math.ceil(72 * n * n * math.log(6 / delta) / eps**2))


def independence_test(joint: EmpiricalJoint, eps: float) -> TestVerdict:
    if joint.total < 1:
        raise EmptyJoint("cannot test an empty joint")
    stat = l1_to_product_of_marginals(joint)
    threshold = eps / 2
    return TestVerdict(stat >= threshold, stat, threshold)


def weissman_bound(n: int, K: int, eps: float) -> float:
    """P(||P_hat_K - P||_1 >= eps) <= 2 exp(-K eps^2 / (2 n)) as stated for support size n."""
    return 2.0 * math.exp(-K * eps * eps / (2.0 * n))
