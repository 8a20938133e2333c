import numpy as np
import pytest

from twostep.lie import su, u


@pytest.fixture(scope="session")
def su2():
    return su(2)


@pytest.fixture(scope="session")
def su2_trace():
    return su(2, "neg_trace")


@pytest.fixture(scope="session")
def su3():
    return su(3)


@pytest.fixture(scope="session")
def u2():
    return u(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


E1, E2, E3 = np.eye(3)


# -- acceptance summary -------------------------------------------------------

_CRITERIA: dict[int, dict] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for number, title in getattr(report, "criteria", ()):
        entry = _CRITERIA.setdefault(number, {"title": title, "ok": True})
        entry["ok"] &= report.passed


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # attach criterion markers so the log hook can see them
    outcome = yield
    report = outcome.get_result()
    report.criteria = [tuple(m.args) for m in item.iter_markers("criterion")]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        verdict = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"[{verdict}] criterion {number}: {entry['title']}")
