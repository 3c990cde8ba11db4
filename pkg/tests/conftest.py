"""Per-criterion pass/fail lines for the acceptance suite.

Acceptance tests are named ``test_criterion_NN_<slug>`` and may attach a
``detail`` user property with the measured values; the terminal summary then
prints one line per criterion.
"""

import re

_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")
_results = {}


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        key = int(match.group(1))
        detail = dict(report.user_properties).get("detail", "")
        status = "PASS" if report.passed else "FAIL"
        if hasattr(report, "wasxfail"):
            status = "XFAIL"
        _results[key] = (status, match.group(2).replace("_", " "), detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_results):
        status, name, detail = _results[key]
        line = f"{status}  criterion {key:2d}: {name}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
