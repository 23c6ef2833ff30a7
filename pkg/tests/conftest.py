import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ksblowup.model import ModelParameters, RadialGrid

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def case2():
    return ModelParameters(n=5, R=1.0, kappa=2.0, lam=0.0, mu=0.1, m0=1.0, m1=0.9)


@pytest.fixture
def case1():
    return ModelParameters(n=4, R=1.0, kappa=1.5, lam=0.0, mu=1.0, m0=1.0, m1=0.9)


def concave_w(rng, s, n_knots=6):
    """Random concave nondecreasing w with w(0) = 0 on nodes ``s``."""
    S = s[-1]
    knots = np.sort(rng.uniform(0.0, S, n_knots - 1))
    slopes = np.sort(rng.lognormal(0.0, 2.0, n_knots))[::-1]
    bounds = np.concatenate(([0.0], knots, [S]))
    ws = np.empty_like(s)
    idx = np.clip(np.searchsorted(bounds, s, side="right") - 1, 0, n_knots - 1)
    seg_w = np.concatenate(([0.0], np.cumsum(slopes * np.diff(bounds))))
    ws[:] = seg_w[idx] + slopes[idx] * (s - bounds[idx])
    return ws
