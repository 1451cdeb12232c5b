import json
from fractions import Fraction
from pathlib import Path

import pytest

FROZEN = Path(__file__).parent / "oracles" / "frozen.json"


@pytest.fixture(scope="session")
def frozen():
    return json.loads(FROZEN.read_text())


def fr(s) -> Fraction:
    return Fraction(s)


ACCEPTANCE: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and rep.passed:
        return
    num, title = mark.args
    ok, secs = ACCEPTANCE.get(num, (True, 0.0, ""))[:2]
    ACCEPTANCE[num] = (ok and rep.passed, secs + rep.duration, title)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, secs, title = ACCEPTANCE[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {num:>2}  {title}  ({secs:.1f}s)")
