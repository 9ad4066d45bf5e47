import json
from pathlib import Path

import pytest

TESTDATA = Path(__file__).parent / "testdata"


def load_golden(name: str) -> list[dict]:
    return json.loads((TESTDATA / name).read_text())["cases"]


@pytest.fixture
def cfg4():
    from fxgb.fxp import FxpConfig

    return FxpConfig(4)


@pytest.fixture
def cfg20():
    from fxgb.fxp import FxpConfig

    return FxpConfig(20)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record the outcome of one acceptance criterion for the summary block."""

    def record(number: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE[number] = (passed, detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")
