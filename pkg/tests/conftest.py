import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from firefront.levelset import SyntheticSpec, synthetic_dataset  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def canonical():
    return synthetic_dataset(SyntheticSpec())


@pytest.fixture(scope="session")
def canonical_constrained():
    return synthetic_dataset(SyntheticSpec(constrained=True))


@pytest.fixture
def record():
    def _record(criterion: str, passed: bool, detail: str = ""):
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {criterion}  {detail}")
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
