import itertools
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from golden_run import run_golden  # noqa: E402


CRITERIA: list[str] = []  # acceptance PASS/FAIL lines, echoed in the summary


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def golden(tmp_path_factory):
    """One full synth -> validate -> ... -> newsflow run on the golden corpus."""
    return run_golden(tmp_path_factory.mktemp("golden"))


def agreement(found, truth):
    """Best fraction of nodes on which two labelings agree over label permutations."""
    users = sorted(truth)
    labels = sorted(set(found.values()) | set(truth.values()))
    tvals = sorted(set(truth.values()))
    best = 0.0
    for perm in itertools.permutations(labels, len(tvals)):
        m = dict(zip(tvals, perm))
        best = max(best, sum(found.get(u) == m[truth[u]] for u in users) / len(users))
    return best
