import dataclasses
import sys
from pathlib import Path

from hypothesis import settings
import pytest

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None)
settings.load_profile("default")

from spdcmap import PAPER_HV_MODEL, SourceConfig, WavelengthGrid  # noqa: E402


@pytest.fixture
def paper_model():
    return PAPER_HV_MODEL


@pytest.fixture
def paper_config():
    return SourceConfig(PAPER_HV_MODEL)


@pytest.fixture
def bright_config():
    from spdcmap.simulate import realistic_peak_rate

    return SourceConfig(dataclasses.replace(PAPER_HV_MODEL, amplitude=realistic_peak_rate(PAPER_HV_MODEL)))


@pytest.fixture
def small_grid():
    return WavelengthGrid.centered(779.5, 0.5, 33)


_ACCEPTANCE = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion.

    Usage: ``acceptance(number, passed, detail)``; the line is printed in the
    terminal summary whether or not the test assertion passes.
    """

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
