import numpy as np
import pytest

from wulffflow import build_grid

from _support import ellipsoid_norm, sample_norms


@pytest.fixture(scope="session")
def grid16():
    return build_grid(2, 16)


@pytest.fixture(scope="session")
def grid32():
    return build_grid(2, 32)


@pytest.fixture(scope="session")
def circle256():
    return build_grid(1, 256)


@pytest.fixture(scope="session")
def norms():
    return sample_norms()


@pytest.fixture(scope="session")
def ellipsoid():
    return ellipsoid_norm()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from _support import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
