"""Terminal summary for the acceptance gate.

Each test_cNN function in test_acceptance.py stands for one acceptance
criterion; after the run, one PASS/FAIL line per criterion is appended to
the terminal summary so the gate can be read at a glance.
"""

import re

_TITLES = {
    1: "reference recovery-rate table via the analyze command",
    2: "Monte Carlo square-tamper rates match theory within 0.5 pp",
    3: "full containment recovers everything, exactly",
    4: "scattered tamper: constrained and random mappings equivalent",
    5: "constrained mapping dominates the movable baselines",
    6: "closed-form rates equal exact counting",
    7: "round trip stays clean at 40+ dB",
    8: "mapping audit: bijection and distance bound",
    9: "decision table agrees with the brute-force oracle",
    10: "rates monotone in window and tamper size",
}

_ACCEPTANCE = re.compile(r"test_acceptance\.py::test_c(\d{2})")
_outcomes: dict[int, str] = {}


def pytest_runtest_logreport(report):
    match = _ACCEPTANCE.search(report.nodeid)
    if match is None:
        return
    criterion = int(match.group(1))
    if report.when == "call":
        verdict = "PASS" if report.outcome == "passed" else "FAIL"
    elif report.outcome in ("failed", "error"):
        verdict = "FAIL"
    else:
        return
    if _outcomes.get(criterion) != "FAIL":
        _outcomes[criterion] = verdict


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_outcomes):
        title = _TITLES.get(criterion, "")
        terminalreporter.write_line(f"CRITERION {criterion}: {_outcomes[criterion]} - {title}")
