import numpy as np
import pytest

from multistable.scenarios import duckrabbit3x3, noisy_copies, xor2

_CRITERIA = {}
_NOTES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config.addinivalue_line("markers", "slow: long-running sweep")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for name, args in getattr(report, "criterion", ()):
        _CRITERIA[args] = report.outcome


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marks = [("criterion", tuple(m.args)) for m in item.iter_markers("criterion")]
    rep.criterion = marks


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), outcome in sorted(_CRITERIA.items()):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  {title}")
        for line in _NOTES.get(number, ()):
            terminalreporter.write_line(f"              {line}")


@pytest.fixture
def note(request):
    """Attach a detail line to the acceptance summary of this test's criterion."""
    marker = request.node.get_closest_marker("criterion")
    lines = _NOTES.setdefault(marker.args[0] if marker else None, [])
    return lines.append


@pytest.fixture
def duck():
    return duckrabbit3x3()


@pytest.fixture
def xor():
    return xor2()


@pytest.fixture
def copies():
    return noisy_copies()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
