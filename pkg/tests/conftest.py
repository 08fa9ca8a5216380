"""Collects one PASS/FAIL line per acceptance criterion and prints them at the end of the run."""

import pytest

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    def record(criterion: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE[criterion] = (bool(ok), detail)
        print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[k]
        terminalreporter.line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
