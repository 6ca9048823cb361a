import numpy as np
import pytest

from speckern.control import DEFAULT_CONTROL
from speckern.kseries import KFunctionContext
from speckern.spectra import FOUR_PI2, TorusGeometry, build_torus_spectrum

# lines printed by the acceptance tests, repeated in the terminal summary
ACCEPTANCE_LINES = []


def report(number: int, title: str, passed: bool, detail: str):
    line = f"ACCEPTANCE {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def square_torus():
    geom = TorusGeometry.from_tau(1j)
    return build_torus_spectrum(geom, FOUR_PI2 * 10, DEFAULT_CONTROL)


@pytest.fixture(scope="session")
def skew_torus():
    geom = TorusGeometry.from_tau(0.3 + 1.2j)
    return build_torus_spectrum(geom, FOUR_PI2 * 10, DEFAULT_CONTROL)


@pytest.fixture(scope="session")
def ctx0(square_torus):
    return KFunctionContext(square_torus, 0.0)


@pytest.fixture(scope="session")
def ctx_half(square_torus):
    return KFunctionContext(square_torus, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
