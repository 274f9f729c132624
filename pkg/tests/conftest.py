import pytest

# filled by tests/test_acceptance.py: (criterion id, passed, detail)
ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    def record(cid, passed, detail):
        line = f"{cid} {'PASS' if passed else 'FAIL'}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
