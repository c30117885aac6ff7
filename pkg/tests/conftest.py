import time

import pytest
from hypothesis import settings

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=60)
settings.load_profile("repo")

SESSION_START = time.perf_counter()

# criterion number -> (passed, note), filled by test_acceptance.py
ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, note = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {note}")
    total = time.perf_counter() - SESSION_START
    terminalreporter.write_line(f"total suite runtime {total:.0f} s ({'within' if total < 900 else 'over'} the 15 min budget)")
