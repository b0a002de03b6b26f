import pytest

_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record a criterion outcome: ``acceptance(number, passed, detail)``."""

    def record(number, passed, detail):
        _ACCEPTANCE[number] = (passed, detail)
        line = f"{'PASS' if passed else 'FAIL'}  criterion {number}: {detail}"
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {number}: {detail}")
