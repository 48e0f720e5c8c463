import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

_ACCEPTANCE = []


def record_acceptance(line: str):
    _ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
