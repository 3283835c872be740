import re
from itertools import combinations, permutations

import pytest


def _std(seq):
    order = sorted(seq)
    return tuple(order.index(v) + 1 for v in seq)


def naive_contains(sigma, pi):
    k = len(pi)
    pi = tuple(pi)
    return any(_std([sigma[i] for i in idx]) == pi for idx in combinations(range(len(sigma)), k))


def naive_count(basis, n):
    """Number of permutations of size n avoiding every pattern of `basis`."""
    basis = [tuple(int(c) for c in b) for b in basis]
    return sum(1 for s in permutations(range(1, n + 1)) if not any(naive_contains(s, b) for b in basis))


@pytest.fixture(scope="session")
def reports():
    from permlimit import analyze, load_spec
    from permlimit.specs import fixture_names

    return {name: analyze(load_spec(name)) for name in fixture_names()}


def pytest_terminal_summary(terminalreporter):
    lines = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", getattr(rep, "nodeid", ""))
            if m and rep.when == "call" or (m and key == "error"):
                n = int(m.group(1))
                ok = key == "passed"
                lines[n] = lines.get(n, True) and ok
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(f"criterion {n}: {'PASS' if lines[n] else 'FAIL'}")
