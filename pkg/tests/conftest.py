import numpy as np
import pytest

from lincycle.model import LinearCyclicModel


def build_model(n, edges, Sigma_e=None):
    """``edges`` maps 1-based ``(i, j)`` to the coefficient of ``x_i -> x_j``."""
    B = np.zeros((n, n))
    for (i, j), v in edges.items():
        B[j - 1, i - 1] = v
    return LinearCyclicModel(B, np.eye(n) if Sigma_e is None else Sigma_e)


@pytest.fixture
def M0():
    return build_model(2, {})


@pytest.fixture
def M2():
    # 2-cycle: x2 -> x1 (0.4), x1 -> x2 (0.5)
    return build_model(2, {(2, 1): 0.4, (1, 2): 0.5})


@pytest.fixture
def M3():
    # chain x1 -> x2 -> x3
    return build_model(3, {(1, 2): 0.8, (2, 3): 0.7})


@pytest.fixture
def M4():
    # fork x1 <- x2 -> x3
    return build_model(3, {(2, 1): 0.8, (2, 3): 0.7})


@pytest.fixture
def M5():
    # collider x1 -> x3 <- x2
    return build_model(3, {(1, 3): 0.8, (2, 3): 0.7})


@pytest.fixture
def fig2_model():
    """Four variables with a 2-cycle x1 <-> x2, plus x1 -> x4 <- x3."""
    return build_model(4, {(1, 2): 0.8, (2, 1): 0.5, (1, 4): 0.6, (3, 4): 0.7})


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
