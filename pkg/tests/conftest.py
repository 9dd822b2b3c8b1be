import pytest
from hypothesis import HealthCheck, settings
from mpmath import mp

settings.register_profile(
    "heatpoint",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("heatpoint")


@pytest.fixture(autouse=True)
def _restore_precision():
    # tests freely change mp.prec; never leak that into the next test
    saved = mp.prec
    yield
    mp.prec = saved


# one line per headline criterion, echoed after the test summary
_ACCEPTANCE_LINES = []


def record_acceptance_line(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.line(line)
