"""Shared fixtures and the acceptance-criterion reporter."""

import pytest

ACCEPTANCE_RESULTS = []


@pytest.fixture(scope="session")
def criterion():
    """Record one pass/fail line per acceptance criterion for the summary."""

    def check(num, description, condition, detail=""):
        ok = bool(condition)
        ACCEPTANCE_RESULTS.append((num, description, ok, detail))
        assert ok, f"criterion {num} ({description}) failed {detail}"

    return check


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num, description, ok, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        line = f"criterion {num}: {status} - {description}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
