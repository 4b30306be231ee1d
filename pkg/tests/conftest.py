import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", max_examples=300, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --- one summary line per acceptance criterion ----------------------------

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not (rep.when == "setup" and not rep.passed)):
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, {"title": title, "states": [], "seconds": 0.0})
    entry["seconds"] += rep.duration
    entry["states"].append("SKIP" if rep.skipped else "PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        states = set(e["states"])
        verdict = "FAIL" if "FAIL" in states else "PASS" if "PASS" in states else "SKIP"
        terminalreporter.write_line(
            f"criterion {n}: {verdict}  {e['title']}  ({len(e['states'])} checks, {e['seconds']:.1f} s)")
