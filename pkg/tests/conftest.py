import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance checklist collected by test_acceptance, if it ran."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT_LINES", None) if mod else None
    if not lines:
        return
    terminalreporter.section("acceptance checklist")
    for line in lines:
        terminalreporter.write_line(line)
