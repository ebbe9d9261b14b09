import pytest

from rwre._backend import available
from rwre.environment import law_from_spec

# Laws used as oracles throughout: closed-form moments are known for each.
LAW_SPECS = {
    "fixed12": ([[1], [2]], {"kind": "mixture", "atoms": [{"w": 1.0, "p": [0.5, 0.5]}]}),
    "mixture": ([[1], [-1]], {"kind": "mixture",
                              "atoms": [{"w": 0.5, "p": [0.9, 0.1]}, {"w": 0.5, "p": [0.1, 0.9]}]}),
    "dirichlet21": ([[1], [-1]], {"kind": "dirichlet", "alphas": [2, 1]}),
}


def make_law(name):
    jumps, spec = LAW_SPECS[name]
    return law_from_spec(jumps, spec)


@pytest.fixture(params=sorted(LAW_SPECS))
def oracle_law(request):
    return request.param, make_law(request.param)


@pytest.fixture(params=available())
def backend(request):
    return request.param


# One line per acceptance criterion, printed at the end of the run.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
