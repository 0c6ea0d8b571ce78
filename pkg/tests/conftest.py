import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def verdict(request):
    """Record one acceptance line, ``CRITERION n PASS|FAIL detail``.

    Lines are printed immediately and repeated in the terminal summary.
    """
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"CRITERION {number} {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
