"""Shared pytest configuration.

Acceptance tests register one verdict per criterion through the
``acceptance`` fixture; the verdicts are printed as PASS/FAIL lines at the
end of the run.
"""

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "vexp", deadline=None, max_examples=25, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("vexp")

_VERDICTS: dict[str, tuple[bool, str]] = {}


class AcceptanceLog:
    def record(self, criterion: str, passed: bool, detail: str = ""):
        line = f"{'PASS' if passed else 'FAIL'} {criterion}" + (f": {detail}" if detail else "")
        print(line)
        _VERDICTS[criterion] = (passed, detail)
        return passed


@pytest.fixture
def acceptance() -> AcceptanceLog:
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_VERDICTS, key=lambda s: int(s.split()[0]) if s.split()[0].isdigit() else 99):
        passed, detail = _VERDICTS[name]
        terminalreporter.write_line(
            f"{'PASS' if passed else 'FAIL'} {name}" + (f": {detail}" if detail else ""))
