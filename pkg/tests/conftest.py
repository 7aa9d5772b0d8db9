import itertools

import numpy as np
import pytest

from causal_ctm.factored_mdp import FactoredSpace, FactoredTransitionModel
from causal_ctm.universe import build_wellness_universe


@pytest.fixture(scope="session")
def wellness():
    """(class, causal model, causal graph) of the default wellness universe."""
    return build_wellness_universe(M=3, seed=0)


def random_model(rng, d_S=2, d_A=1, n=2, max_scope=2, alpha=1.0):
    """Factored model with random scopes and Dirichlet CPT rows."""
    d_in = d_S + d_A
    scopes, cpts = [], []
    for _ in range(d_S):
        k = int(rng.integers(0, max_scope + 1))
        scope = tuple(sorted(rng.choice(d_in, size=k, replace=False).tolist()))
        scopes.append(scope)
        cpts.append(rng.dirichlet(np.full(n, alpha), size=n**k))
    return FactoredTransitionModel(FactoredSpace(d_S, n), FactoredSpace(d_A, n), tuple(scopes), tuple(cpts))


def brute_force_prob(model, x, y):
    """P(y|x) by walking the CPT rows one parent at a time."""
    p = 1.0
    for j, scope in enumerate(model.scopes):
        row = 0
        for z in scope:
            row = row * model.n + x[z]
        p *= model.cpts[j][row][y[j]]
    return p


def all_vectors(d, n):
    return list(itertools.product(range(n), repeat=d))


def brute_force_optimum(P, r, H, mu):
    """Best V1 over every deterministic nonstationary policy, by forward propagation.

    All A**(H*S) policies are evaluated in one batch.
    """
    S, A = r.shape
    acts = np.array(list(itertools.product(range(A), repeat=H * S)), dtype=np.int64).reshape(-1, H, S)
    d = np.tile(np.asarray(mu, dtype=float), (acts.shape[0], 1))
    total = np.zeros(acts.shape[0])
    states = np.arange(S)
    for h in range(H):
        a = acts[:, h, :]
        total += (d * r[states, a]).sum(axis=1)
        d = np.einsum("ps,psk->pk", d, P[states, a])
    return float(total.max())


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, grouped by criterion number."""
    import re

    outcomes = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            nodeid = getattr(rep, "nodeid", "")
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", nodeid)
            if not m or getattr(rep, "when", "call") not in ("call", "setup"):
                continue
            num = int(m.group(1))
            ok = key == "passed"
            prev = outcomes.get(num, (True, []))
            outcomes[num] = (prev[0] and ok, prev[1] + [f"{m.group(2)}={'ok' if ok else 'FAIL'}"])
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(outcomes):
        ok, parts = outcomes[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'} ({', '.join(parts)})")
