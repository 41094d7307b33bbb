import itertools

import numpy as np
import pytest

from qident import QMatrix

ACCEPTANCE_LOG = []


def record_criterion(name: str, passed: bool, detail: str = "") -> None:
    line = f"{'PASS' if passed else 'FAIL'} {name}: {detail}"
    ACCEPTANCE_LOG.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def brute_force_generic_complete(q: QMatrix) -> bool:
    """Oracle: exhaustive row-subset x column-permutation search for an
    all-ones diagonal.  Exponential; keep K <= 5, J <= 8."""
    J, K = q.n_items, q.n_attributes
    if J < K:
        return False
    entries = q.entries
    for rows in itertools.combinations(range(J), K):
        for perm in itertools.permutations(range(K)):
            if all(entries[rows[i], perm[i]] for i in range(K)):
                return True
    return False


def random_q(rng, n_items, n_attributes, ensure_nonzero_rows=False):
    while True:
        entries = (rng.random((n_items, n_attributes)) < 0.5).astype(int)
        if not ensure_nonzero_rows or entries.sum(axis=1).min() > 0:
            return QMatrix(entries)
