import pytest

_scorecard = []


@pytest.fixture(scope="session")
def scorecard():
    """Shared list of acceptance result lines, echoed after the test run."""
    return _scorecard


def pytest_terminal_summary(terminalreporter):
    if _scorecard:
        terminalreporter.section("acceptance criteria")
        for line in _scorecard:
            terminalreporter.write_line(line)
