from helpers import verdicts


def pytest_terminal_summary(terminalreporter):
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for (n, title), ok in sorted(verdicts.items()):
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}")
