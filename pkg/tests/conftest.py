import warnings

import numpy as np
import pytest

from dclab.core import OperatorSpec
from dclab.kernels import kernel_context
from dclab.oracle import example3_coefficient
from dclab.periodic import PeriodicFunction


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def spec3():
    """λ = 1+i with the single-mode coefficient c = 0.5i e^{it}."""
    return OperatorSpec(1.0, 1.0, 0.0, 1.0, example3_coefficient(0.5, 1, 33))


@pytest.fixture(scope="session")
def spec0():
    return OperatorSpec(1.0, 1.0, 0.0, 1.0, PeriodicFunction.constant(0.0, 33))


@pytest.fixture(scope="session")
def ctx3(spec3):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return kernel_context(spec3, J=64)


@pytest.fixture(scope="session")
def ctx3_small(spec3):
    return kernel_context(spec3, J=8)


@pytest.fixture(scope="session")
def ctx0(spec0):
    return kernel_context(spec0, J=64)


@pytest.fixture(scope="session")
def p3():
    from dclab.second_order import build_P

    return build_P(1 + 0.5j, PeriodicFunction.from_modes({1: 0.3j, -2: 0.1}, 33))


@pytest.fixture(scope="session")
def p3_window(p3):
    from dclab.spectrum import find_spectral_values

    return find_spectral_values(p3.op, -6, 6)


@pytest.fixture(scope="session")
def p3_ctx(p3):
    return kernel_context(p3.op, J=16)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""
    def report(n, title, ok, detail):
        ACCEPTANCE_LINES.append((n, f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"))
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
