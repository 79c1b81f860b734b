import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# ---------------------------------------------------------------------------
# Acceptance summary: one PASS/FAIL line per numbered criterion
# ---------------------------------------------------------------------------

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = int(marker.args[0])
    failed = report.failed or (report.when == "call" and report.outcome != "passed"
                               and not report.skipped)
    if report.when == "call" or report.failed:
        prev = _CRITERIA.get(n, (True, []))
        _CRITERIA[n] = (prev[0] and not failed, prev[1] + [item.name])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, names = _CRITERIA[n]
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  ({', '.join(names)})")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
