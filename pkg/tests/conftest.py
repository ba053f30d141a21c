"""Shared pytest glue.

The acceptance module records one verdict per criterion; the hook below
prints them in the terminal summary so a plain `pytest -v` run always shows
the pass/fail table, capture or no capture.
"""

import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None) if mod else None
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(verdicts.items()):
        terminalreporter.write_line(line)
