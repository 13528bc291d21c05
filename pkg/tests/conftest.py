import pytest

from lfdkit.optimize import SearchSpace
from lfdkit.pipeline import train
from lfdkit.select import SelectionConfig
from lfdkit.synth import synth_task

# kept small so that the shared model trains in a few seconds
FAST_SELECTION = SelectionConfig(k_min=2, k_max=4, folds=10, mc_samples=500)


@pytest.fixture(scope="session")
def small_demos():
    return synth_task(n_dof=2, n_demos=3, seed=11)


@pytest.fixture(scope="session")
def small_model(small_demos):
    return train(small_demos, FAST_SELECTION, SearchSpace(), seed=3, task="small")


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Collects one verdict line per acceptance criterion."""
    def record(number, passed, detail):
        verdict = passed if isinstance(passed, str) else "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"criterion {number}: {verdict} - {detail}")
        print(ACCEPTANCE_LINES[-1])
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
