import sys
from contextlib import contextmanager
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.fixture
def criterion():
    """Record a pass/fail/skip line for one acceptance criterion."""

    @contextmanager
    def _criterion(num: int, description: str):
        try:
            yield
        except BaseException as exc:
            outcome = "SKIP" if isinstance(exc, pytest.skip.Exception) else "FAIL"
            _ACCEPTANCE[num] = (description, outcome)
            raise
        _ACCEPTANCE[num] = (description, "PASS")

    return _criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        description, outcome = _ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:>2}: {outcome}  {description}")
