import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "pkg", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("pkg")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_pure(rng, N):
    v = rng.normal(size=N + 1) + 1j * rng.normal(size=N + 1)
    return v / np.linalg.norm(v)


def random_density(rng, N, rank=None):
    rank = rank or N + 1
    a = rng.normal(size=(N + 1, rank)) + 1j * rng.normal(size=(N + 1, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
