import sys


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion after the run."""
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
