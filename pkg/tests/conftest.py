from __future__ import annotations

from contextlib import contextmanager

import pytest

from crowdreport.model import ClassRegistry

# (criterion name, passed, optional detail) accumulated by the acceptance
# suite and echoed as one line each at the end of the run.
ACCEPTANCE_RESULTS: list[tuple[str, bool, str | None]] = []


@contextmanager
def criterion(name: str, detail: list[str] | None = None):
    """Record one acceptance criterion outcome; detail lines are reported
    under the pass/fail line."""
    try:
        yield
    except BaseException:
        ACCEPTANCE_RESULTS.append((name, False, "; ".join(detail) if detail else None))
        raise
    ACCEPTANCE_RESULTS.append((name, True, "; ".join(detail) if detail else None))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}: {name}")
        if detail:
            terminalreporter.write_line(f"      {detail}")


@pytest.fixture
def registry() -> ClassRegistry:
    return ClassRegistry.default()
