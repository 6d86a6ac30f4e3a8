from __future__ import annotations

import numpy as np
import pytest

from lcelab.ensembles import EnsembleSpec, SampleMatrix, sample_matrix


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def gaussian_matrix():
    def make(n, N, seed=0):
        return sample_matrix(EnsembleSpec("gaussian", n), N, seed)

    return make


def matrix_from_columns(*cols) -> SampleMatrix:
    return SampleMatrix.from_columns(np.array(cols, dtype=float))


# ------------------------------------------------ acceptance reporting

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        detail = dict(report.user_properties).get("detail", "")
        if report.failed and call.excinfo is not None and not detail:
            detail = call.excinfo.exconly().splitlines()[0][:160]
        item.config.stash[_ACCEPTANCE_KEY].append((str(marker.args[0]), report.outcome, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = config.stash.get(_ACCEPTANCE_KEY, [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, detail in sorted(rows, key=lambda r: (len(r[0].rstrip("abc")), r[0])):
        status = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"criterion {label:>3}: {status}  {detail}")
