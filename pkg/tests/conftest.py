from __future__ import annotations

import pytest

from lossy_bandit.core import DistortionSpec, SourceModel


@pytest.fixture(scope="session")
def s0():
    """Binary source (0.8, 0.2), Hamming, d = 0."""
    return SourceModel.categorical([0.8, 0.2]), DistortionSpec.hamming(2, 0.0)


@pytest.fixture(scope="session")
def s1():
    """Length-4 binary vectors, P_U = (0.7, 0.3), additive Hamming, d = 1."""
    return SourceModel.product([0.7, 0.3], 4), DistortionSpec.hamming(2, 1.0, length=4)


# ---------------------------------------------------------------- acceptance summary

_ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or (rep.when == "setup" and rep.failed)):
        return
    n, title = mark.args
    passed = rep.passed and not hasattr(rep, "wasxfail")
    detail = "; ".join(str(v) for k, v in rep.user_properties if k == "detail")
    verdict = "PASS" if passed else ("FAIL (expected)" if hasattr(rep, "wasxfail") else "FAIL")
    _ACCEPTANCE[n] = (title, verdict, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, verdict, detail = _ACCEPTANCE[n]
        line = f"{verdict} criterion {n:>2} {title}"
        terminalreporter.write_line(line + (f" [{detail}]" if detail else ""))
