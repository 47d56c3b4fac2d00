import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from flexmh.config import environment_from_config, example_config
from flexmh.funcspace import LinearEffort, PowerCost, PowerEffort
from flexmh.model import build_environment

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def ex1():
    return environment_from_config(example_config("ef-ex1"))


@pytest.fixture(scope="session")
def osc():
    return environment_from_config(example_config("osc-ex1"))


@pytest.fixture(scope="session")
def symmetric():
    K = PowerCost(1.0, 2.0)
    return build_environment((0.0, 0.5), LinearEffort(1.0), [(0.5, K), (0.5, K)])


@pytest.fixture(scope="session")
def quad_linear():
    """Quadratic costs with c(x) = x on [0, 1]: envelope slope xi = 1."""
    return build_environment((0.0, 1.0), LinearEffort(1.0),
                             [(0.4, PowerCost(1.5, 2.0)), (0.6, PowerCost(0.6, 2.0))])


@pytest.fixture(scope="session")
def s_shaped():
    from flexmh.funcspace import PiecewiseLinearEffort
    eff = PiecewiseLinearEffort((0.0, 0.2, 0.5, 0.8, 1.0), (0.0, 0.3, 0.45, 0.6, 0.9))
    return build_environment((0.0, 1.0), eff,
                             [(0.5, PowerCost(1.2, 2.0)), (0.5, PowerCost(0.5, 2.5))])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def concave_effort_env(gamma=0.5):
    return build_environment((0.0, 1.0), PowerEffort(gamma),
                             [(0.5, PowerCost(1.0, 2.0)), (0.5, PowerCost(0.5, 2.0))])


_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record_criterion():
    """Store a one-line verdict for an acceptance criterion."""
    def record(number: int, ok: bool, detail: str):
        _CRITERIA[number] = (bool(ok), detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
