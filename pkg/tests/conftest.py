import os

# oversubscribe on small machines so thread-count tests exercise real segmentation;
# must happen before numba is first imported
os.environ.setdefault("NUMBA_NUM_THREADS", "8")

import numpy as np
import pytest

_OUTCOMES: dict[int, list[tuple[str, str]]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number k")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args[0]))


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        outcome = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        _OUTCOMES.setdefault(crit, []).append((outcome, report.nodeid.split("::")[-1]))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_OUTCOMES):
        parts = _OUTCOMES[crit]
        kinds = {o for o, _ in parts}
        overall = "FAIL" if "FAIL" in kinds else ("PASS" if kinds == {"PASS"} else
                                                  "SKIP" if kinds == {"SKIP"} else "PARTIAL")
        detail = ", ".join(f"{name}={o}" for o, name in parts)
        terminalreporter.write_line(f"criterion {crit:>2}: {overall:<7} {detail}")
