import re

import numpy as np
import pytest

from oasim.sampledata import write_demo


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory):
    """One demo asset tree (map/scene/rig/scenario) shared by the session."""
    root = tmp_path_factory.mktemp("demo")
    write_demo(root)
    return root


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


# one summary line per acceptance criterion, printed even under capture
_CRITERION_RESULTS = {}
_CRITERION_RE = re.compile(r"test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    m = _CRITERION_RE.search(report.nodeid)
    if not m:
        return
    num = int(m.group(1))
    desc = m.group(2).replace("_", " ")
    if report.when == "call":
        outcome = "PASS" if report.passed else ("FAIL" if report.failed else "SKIP")
        _CRITERION_RESULTS[num] = (outcome, desc)
    elif report.failed:  # setup/teardown error
        _CRITERION_RESULTS[num] = ("FAIL", f"{desc} ({report.when} error)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERION_RESULTS):
        outcome, desc = _CRITERION_RESULTS[num]
        terminalreporter.write_line(f"criterion {num}: {outcome} - {desc}")
