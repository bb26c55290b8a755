import warnings

import pytest
from hypothesis import settings

from batwb.errors import ExtrapolationWarning
from batwb.ocp import default_ocp
from batwb.params import SpatialGrid, preset

settings.register_profile("repo", max_examples=40, deadline=None)
settings.load_profile("repo")

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one acceptance criterion outcome; printed in the session summary."""

    def record(number, title, passed, detail=""):
        line = f"ACCEPTANCE {number:>2} {'PASS' if passed else 'FAIL'}  {title}  ({detail})"
        _ACCEPTANCE.append((number, line))
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def nmc():
    return preset("nmc_graphite")


@pytest.fixture(scope="session")
def lfp():
    return preset("lfp_graphite")


@pytest.fixture(scope="session")
def nmc_ocp():
    return default_ocp("nmc")


@pytest.fixture(scope="session")
def lfp_ocp():
    return default_ocp("lfp")


@pytest.fixture(scope="session")
def small_grid():
    return SpatialGrid(n_r=10, n_x_p=4, n_x_s=3, n_x_n=4)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExtrapolationWarning)
        yield
