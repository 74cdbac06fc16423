import pytest

from gsarelay import preset, sample_channels, design

# filled by test_acceptance; echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def y3():
    """3-user Y channel, two antennas per node, N=5."""
    return preset("y", K=3, M=2, N=5)


@pytest.fixture
def y3_design(y3):
    channels = sample_channels(y3, 1)
    return y3, channels, design(y3, channels)
