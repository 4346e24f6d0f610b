import sys


def pytest_terminal_summary(terminalreporter):
    mods = [m for name, m in sys.modules.items() if name.endswith("test_acceptance") and hasattr(m, "report_lines")]
    lines = mods[0].report_lines() if mods else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
