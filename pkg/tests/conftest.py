import os
import re

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_CRITERION = re.compile(r"test_ac(\d+)_")
_acceptance = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if "test_acceptance.py" not in report.nodeid or not m:
        return
    if report.when == "call" or report.failed:
        key = int(m.group(1))
        verdict = "PASS" if report.passed else "FAIL"
        if _acceptance.get(key, ("", ""))[1] == "FAIL":
            verdict = "FAIL"
        _acceptance[key] = (report.nodeid.split("::")[-1].split("[")[0], verdict)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_acceptance):
        name, verdict = _acceptance[key]
        terminalreporter.write_line(f"{verdict}  criterion {key:2d}  {name}")


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(12345)
