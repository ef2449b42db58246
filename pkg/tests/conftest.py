import pytest

from circuitdesign.objectives import PerformanceCostObjective
from circuitdesign.solvers import ProblemSpec, exhaustive_search

# lines recorded by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def perf_objective():
    return PerformanceCostObjective()


@pytest.fixture(scope="session")
def perf_problem_m2(perf_objective):
    return ProblemSpec(perf_objective, m_max=2)


@pytest.fixture(scope="session")
def oracle_m2(perf_problem_m2):
    return exhaustive_search(perf_problem_m2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
