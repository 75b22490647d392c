import numpy as np
import pytest

from pnormcl import Grid, Kernel, Scenario, VelocityModel, field_from_datum, riemann


def make_scenario(kernel="exponential", p=1.0, eta=0.5, a=0.5, b=1.0, n=1600,
                  T=0.5, record_times=(), x_min=-4.0, x_max=4.0, datum=None):
    g = Grid(x_min, x_max, n)
    d = datum if datum is not None else riemann(a, b, 0.0)
    k = kernel if isinstance(kernel, Kernel) else Kernel(kernel)
    return Scenario(field_from_datum(d, g), VelocityModel.linear(), k, p, eta, T,
                    tuple(record_times), d)


@pytest.fixture
def scenario_factory():
    return make_scenario


@pytest.fixture
def preset_grid():
    return Grid(-4.0, 4.0, 1600)


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
