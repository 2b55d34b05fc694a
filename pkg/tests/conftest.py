import pytest

ACCEPTANCE = {}


@pytest.fixture
def report():
    def _report(number, ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
