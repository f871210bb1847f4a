import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance pass/fail lines after the test results.

    The acceptance module collects one line per criterion as it runs;
    printing them here keeps them visible even though pytest captures
    stdout inside the tests themselves.
    """
    for name, module in list(sys.modules.items()):
        if name.rsplit(".", 1)[-1] != "test_acceptance":
            continue
        lines = getattr(module, "ACCEPTANCE_LINES", None)
        if lines:
            terminalreporter.section("acceptance criteria")
            for line in lines:
                terminalreporter.write_line(line)
