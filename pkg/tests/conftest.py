"""Collect the one-line acceptance verdicts and repeat them in the summary."""

_LINES = []


def pytest_runtest_logreport(report):
    if report.when == "call":
        _LINES.extend(value for key, value in report.user_properties if key == "acceptance")


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
