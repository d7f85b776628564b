import os

import hypothesis
import numpy as np
import pytest

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=25, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=300, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fast"))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow Monte-Carlo checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def complex_normal(rng, shape, variance=1.0):
    return np.sqrt(variance / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def face_oracle(Q, C):
    """Exact box-QP dual optimum by enumerating every {0, C, free} face.

    Requires Q positive definite so that each free block is nonsingular.
    """
    P = Q.shape[0]
    best_value, best_alpha = -np.inf, None
    for code in range(3 ** P):
        state = [(code // 3 ** q) % 3 for q in range(P)]
        alpha = np.array([C if s == 1 else 0.0 for s in state])
        free = np.array([s == 2 for s in state])
        if free.any():
            rhs = 1.0 - Q[np.ix_(free, ~free)] @ alpha[~free]
            alpha[free] = np.linalg.solve(Q[np.ix_(free, free)], rhs)
            if np.any(alpha[free] < -1e-12) or np.any(alpha[free] > C + 1e-12):
                continue
        value = alpha.sum() - 0.5 * alpha @ Q @ alpha
        if value > best_value:
            best_value, best_alpha = value, alpha
    return best_alpha
