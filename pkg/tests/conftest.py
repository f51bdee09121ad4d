import re

import pytest

ACCEPTANCE = []


@pytest.fixture
def record():
    """Log one acceptance line; the summary prints them all at the end of the run."""

    def _record(label, ok, detail):
        ACCEPTANCE.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(re.search(r"criterion (\d+)", s).group(1))):
            terminalreporter.write_line(line)
