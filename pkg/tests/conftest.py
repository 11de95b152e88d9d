import math

import pytest

from dpplan.cli import fixture_path
from dpplan.csvio import load_csv
from dpplan.workloads import ADULT_SCHEMA, COLOR_SCHEMA, PACKET_SCHEMA


def laplace_alpha(b, beta):
    """Reference Laplace tail: Pr[|X| > t] = exp(-t/b), solved for t."""
    return b * math.log(1 / beta)


def chernoff_alpha(scales, beta):
    """Reference Chernoff bound written out independently of the library."""
    nu = max(math.sqrt(sum(b * b for b in scales)), max(scales) * math.sqrt(math.log(2 / beta)))
    return (nu + 1e-5) * math.sqrt(8 * math.log(2 / beta))


@pytest.fixture(scope="session")
def packets():
    return load_csv(fixture_path("packets.csv"), PACKET_SCHEMA)


@pytest.fixture(scope="session")
def adult():
    return load_csv(fixture_path("adult.csv"), ADULT_SCHEMA)


@pytest.fixture(scope="session")
def colors():
    return load_csv(fixture_path("colors.csv"), COLOR_SCHEMA)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
