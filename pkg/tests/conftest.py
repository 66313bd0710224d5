import numpy as np
import pytest

# acceptance criteria register (id, description, passed, detail) here
ACCEPTANCE_RESULTS = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid, desc, passed, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: (int(r[0].split(".")[0]), r[0])):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] AC{cid}: {desc} -- {detail}")
