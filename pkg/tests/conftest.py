import pytest

from delta_lab.divisor_sieve import CheckpointCache


@pytest.fixture
def cache(tmp_path):
    return CheckpointCache(tmp_path / "cache")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
