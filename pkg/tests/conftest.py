import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from steadyvortex.domain_green import DomainSpec, build_green_evaluator

settings.register_profile(
    "numeric",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("numeric")


@pytest.fixture(scope="session")
def disk():
    return DomainSpec.unit_disk()


@pytest.fixture(scope="session")
def disk_ev(disk):
    return build_green_evaluator(disk)


@pytest.fixture(scope="session")
def disk_mfs(disk):
    return build_green_evaluator(disk, tol=1e-8, method="mfs")


@pytest.fixture(scope="session")
def ellipse():
    return DomainSpec.ellipse(1.0, 0.6)


@pytest.fixture(scope="session")
def ellipse_ev(ellipse):
    return build_green_evaluator(ellipse, tol=1e-6)


def image_regular_part(y, x):
    """Closed-form disk regular part ``H(y, x) = (1/2π) ln(1 / (|x| |y - x/|x|²|))``."""
    y = np.atleast_2d(y)
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x)
    if r == 0:
        return np.zeros(len(y))
    xs = x / r**2
    return np.log(1.0 / (r * np.linalg.norm(y - xs, axis=1))) / (2 * np.pi)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
