import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sublinear_potential import Shape, build_domain, build_green

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def square8():
    d = build_domain(Shape.square(), 1 / 8)
    return d, build_green(d)


@pytest.fixture(scope="session")
def square16():
    """16 x 16 interior nodes."""
    d = build_domain(Shape.square(), 1 / 17)
    return d, build_green(d)


@pytest.fixture(scope="session")
def disk16():
    d = build_domain(Shape.disk(), 1 / 16)
    return d, build_green(d)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def disk64_kato():
    """Kato reports of delta^(-alpha) dx on the disk at h = 1/64, keyed by
    alpha (one shared pass over the Green rows)."""
    from sublinear_potential import dist_alpha_measure
    from sublinear_potential.potential import kato_moduli

    d = build_domain(Shape.disk(), 1 / 64)
    G = build_green(d)
    alphas = (0.5, 1.0, 1.5, 1.95)
    reps = kato_moduli(G, [dist_alpha_measure(d, a) for a in alphas])
    return dict(zip(alphas, reps))
