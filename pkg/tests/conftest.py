import numpy as np
import pytest

from boundary_reps.words import GroupContext


@pytest.fixture(params=[2, 3], ids=["r2", "r3"])
def ctx(request):
    return GroupContext(request.param)


@pytest.fixture
def ctx2():
    return GroupContext(2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    entry = _ACCEPTANCE.setdefault(report.nodeid, {"outcome": "passed", "info": ""})
    if report.failed:
        entry["outcome"] = "failed"
    elif report.skipped:
        entry["outcome"] = "skipped"
    for key, value in report.user_properties:
        if key == "info":
            entry["info"] = value


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for nodeid, entry in sorted(_ACCEPTANCE.items()):
        name = nodeid.split("::test_criterion_")[1]
        number, _, title = name.partition("_")
        verdict = {"passed": "PASS", "failed": "FAIL"}.get(entry["outcome"], "SKIP")
        line = f"criterion {int(number):2d} {title.replace('_', ' '):<28} {verdict}"
        if entry["info"]:
            line += f"  ({entry['info']})"
        terminalreporter.write_line(line)
