import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.differing_executors],
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report_criterion():
    """Record one pass/fail line per acceptance criterion; printed in the terminal summary."""

    def _report(number: int, title: str, passed: bool, detail: str = "") -> None:
        line = f"AC{number:02d} {'PASS' if passed else 'FAIL'} {title}" + (f" | {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
