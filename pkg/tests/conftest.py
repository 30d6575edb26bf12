# Keeps the tests directory on sys.path so helpers.py imports everywhere.


def pytest_terminal_summary(terminalreporter):
    """Replay the acceptance gate verdicts, one line per criterion."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
