import pytest

from cupsense.circuit import generate_freshness_dataset, generate_kind_dataset
from cupsense.io import load_class_specs, load_freshness_specs


@pytest.fixture(scope="session")
def kind_specs():
    return load_class_specs()


@pytest.fixture(scope="session")
def kind_dataset(kind_specs):
    return generate_kind_dataset(kind_specs, 10, seed=0)


@pytest.fixture(scope="session")
def freshness_profiles():
    return load_freshness_specs()


@pytest.fixture(scope="session")
def freshness_dataset(freshness_profiles):
    fs = next(iter(freshness_profiles.values()))
    return generate_freshness_dataset(fs.base, fs.drift, fs.hours, 10, seed=0)


# -- acceptance summary: one PASS/FAIL line per criterion ---------------------

_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("detail", "")
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in _ACCEPTANCE:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}  {detail}".rstrip())
