"""Collects one pass/fail line per acceptance criterion for the terminal summary."""
from __future__ import annotations

import pytest

_RESULTS: list[tuple[str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(text): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _RESULTS.append(("PASS" if rep.passed else "FAIL", mark.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for status, text in _RESULTS:
        terminalreporter.write_line(f"{status} {text}")
