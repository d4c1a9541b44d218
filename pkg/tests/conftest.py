import sys


def pytest_terminal_summary(terminalreporter):
    """Echo per-criterion acceptance verdicts after the run."""
    lines = []
    for name, module in sys.modules.items():
        if name.rpartition(".")[2] == "test_acceptance":
            lines.extend(getattr(module, "VERDICTS", []))
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
