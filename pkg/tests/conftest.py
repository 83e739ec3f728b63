"""Shared pytest hooks: one PASS/FAIL line per acceptance criterion."""
from __future__ import annotations

import pytest

_RESULTS: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    num, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    _RESULTS[num] = (title, "PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_RESULTS):
        title, verdict, detail = _RESULTS[num]
        line = f"criterion {num:2d} {verdict}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
