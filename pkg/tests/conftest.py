import pytest

# filled by test_acceptance.py, one (number, name, passed, detail) per criterion
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def record():
    def _record(number, name, passed, detail):
        ACCEPTANCE.append((number, name, bool(passed), detail))
        print(f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {name}: {detail}")
        assert passed, detail

    return _record
