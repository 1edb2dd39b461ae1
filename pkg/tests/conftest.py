import numpy as np
import pytest

from logcalib.noise import (gaussian_family, laplace_family, logistic_family, subbotin_family,
                            truncated_laplace_family)


def builtin_families():
    return [
        laplace_family(),
        logistic_family(),
        gaussian_family(),
        subbotin_family(1.5),
        subbotin_family(4.0),
        truncated_laplace_family(3.0),
    ]


@pytest.fixture(params=builtin_families(), ids=lambda f: f.name)
def family(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT

    if not REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(REPORT):
        terminalreporter.write_line(REPORT[number])
