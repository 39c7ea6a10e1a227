import numpy as np
import pytest

from sets_coreset import LossSpec

ALL_LOSSES = [
    LossSpec.median(),
    LossSpec.means(),
    LossSpec.huber(1.0),
    LossSpec.huber(0.25),
    LossSpec.lpsi(1.0),
    LossSpec.lpsi(3.0),
    LossSpec.lpsi(0.5, allow_subnorm=True),
]

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def record():
    """Record one acceptance criterion result; printed in the terminal summary."""
    def _record(name: str, passed: bool, detail: str = ""):
        _ACCEPTANCE.append((name, bool(passed), detail))
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
