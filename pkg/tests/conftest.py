"""Shared pytest wiring.

After the normal summary, reprint the scoreboard collected by the
end-to-end checks so a plain ``pytest`` run (captured stdout and all)
still ends with one visible PASS/FAIL line per check.
"""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        from test_acceptance import RESULTS
    except Exception:
        return
    if not RESULTS:
        return
    terminalreporter.section("end-to-end checks")
    for line in RESULTS:
        terminalreporter.write_line(line)
