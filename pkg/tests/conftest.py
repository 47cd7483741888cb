import numpy as np
import pytest

_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    label = getattr(item.function, "acceptance_label", None)
    if label is None:
        return
    lines = item.config.stash[_ACCEPTANCE_KEY]
    if report.when == "call" or (report.when == "setup" and report.failed):
        lines[label] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[_ACCEPTANCE_KEY]
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(f"{lines[label]} {label}")
