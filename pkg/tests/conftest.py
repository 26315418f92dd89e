"""Shared fixtures; collects acceptance verdicts for the terminal summary."""

import pytest

_VERDICTS: dict[int, tuple[str, bool, str]] = {}


class Verdict:
    def __init__(self, number: int, title: str):
        self.number, self.title = number, title

    def record(self, ok: bool, detail: str = "") -> bool:
        _VERDICTS[self.number] = (self.title, bool(ok), detail)
        return ok


@pytest.fixture
def verdict(request):
    marker = request.node.get_closest_marker("acceptance")
    number, title = marker.args
    v = Verdict(number, title)
    # a test that dies before recording still shows up as a failure
    _VERDICTS.setdefault(number, (title, False, "did not complete"))
    return v


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        title, ok, detail = _VERDICTS[n]
        line = f"[{n:2d}] {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
