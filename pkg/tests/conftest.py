import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

CRITERIA = {
    1: "XOR structure: constant 1/2 loses exactly 1/4, best reply 1/4",
    2: "naive schemes: averaging 1/16, most-confident >= 1/14",
    3: "precision scheme worst case over Blackwell-ordered experts",
    4: "Blackwell maxmin mixture value (5 sqrt 5 - 11)/8",
    5: "average-prior worst case over i.i.d.-style experts; CI maxmin value",
    6: "shifted-prior worst case",
    7: "best reply to the two-branch martingale: stationarity, far-pair agreement",
    8: "perturbed XOR pair lower bound near 1/4",
    9: "chain adversary structure and bounds",
    10: "counting scheme below the Hoeffding bound",
    11: "property suites: loss identity, martingale round trip, Bayes vs omniscient",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): test belongs to acceptance criterion n")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        n = marker.args[0]
        failed = call.excinfo is not None
        xfail = item.get_closest_marker("xfail")
        note = ""
        if failed and xfail is not None:
            note = xfail.kwargs.get("reason", "")
        entry = _outcomes.setdefault(n, [])
        entry.append((item.name, failed, note))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(CRITERIA):
        if n not in _outcomes:
            continue
        results = _outcomes[n]
        bad = [(name, note) for name, failed, note in results if failed]
        status = "FAIL" if bad else "PASS"
        line = f"criterion {n:2d}: {status}  {CRITERIA[n]} ({len(results) - len(bad)}/{len(results)} checks)"
        tr.write_line(line)
        for name, note in bad:
            tr.write_line(f"    failed: {name}" + (f" [{note}]" if note else ""))
