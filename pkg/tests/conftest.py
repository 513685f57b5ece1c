import numpy as np
import pytest

from mixbo.space import ParameterSpec, SearchSpace


def mixed_space():
    return SearchSpace((
        ParameterSpec.continuous("x", -5.0, 5.0),
        ParameterSpec.integer("n", 0, 4),
        ParameterSpec.discrete("d", (0, 1, 3, 4, 7, 9)),
        ParameterSpec.binary("b"),
        ParameterSpec.categorical("c", ("red", "green", "blue")),
    ))


def numeric_space():
    return SearchSpace((
        ParameterSpec.continuous("x", 0.0, 1.0),
        ParameterSpec.integer("n", 0, 5),
        ParameterSpec.discrete("d", (2, 4, 7, 8)),
    ))


def integer_space():
    return SearchSpace((
        ParameterSpec.continuous("x", 0.0, 1.0),
        ParameterSpec.integer("n", 0, 5),
        ParameterSpec.binary("b"),
    ))


def random_points(space, n, rng):
    """Random valid normalized points (ordinal coordinates on anchors)."""
    return space.from_unit(rng.random((n, space.dim)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
