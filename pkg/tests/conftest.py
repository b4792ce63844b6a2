import pytest

# one "PASS|FAIL <criterion> <detail>" line per acceptance criterion
_CRITERIA = []


@pytest.fixture(scope="session")
def record_criterion():
    def record(criterion, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'} {criterion} {detail}".rstrip()
        _CRITERIA.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
