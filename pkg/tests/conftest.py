import numpy as np
import pytest

from coreset_forge.metric import PointSet


def brute_cost(X, C, z, mult=None):
    """Per-point min_s ||x - s||^z by an explicit double loop."""
    X = np.asarray(X, dtype=float)
    C = np.asarray(C, dtype=float)
    out = []
    for x in X:
        best = None
        for c in C:
            v = float(np.sqrt(sum((a - b) ** 2 for a, b in zip(x, c)))) ** z
            if best is None or v < best:
                best = v
        out.append(best)
    out = np.array(out)
    if mult is not None:
        return float(np.sum(np.asarray(mult) * out))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def blobs():
    """Small well separated 3-cluster instance."""
    r = np.random.default_rng(7)
    centers = np.array([[0.0, 0.0], [30.0, 0.0], [0.0, 30.0]])
    X = np.vstack([c + r.standard_normal((60, 2)) for c in centers])
    return PointSet(X)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
