import json
import shutil
from pathlib import Path

import pytest

from cardwright.ingest import parse_bundle
from cardwright.schema import load_catalog

FIXTURES = Path(__file__).parent / "fixtures"
TOY = FIXTURES / "toy_audit"


@pytest.fixture(scope="session")
def catalog():
    return load_catalog()


@pytest.fixture(scope="session")
def raw_tables():
    return json.loads((FIXTURES / "card_tables_raw.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def toy_bundle():
    return parse_bundle(TOY)


@pytest.fixture
def toy_copy(tmp_path):
    """A writable copy of the toy audit bundle."""
    target = tmp_path / "toy"
    shutil.copytree(TOY, target)
    return target


def edit_json(path, change):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    change(data)
    Path(path).write_text(json.dumps(data, indent=2), encoding="utf-8")
    return data


# --- acceptance criterion summary -------------------------------------------------

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker.args
    if report.when == "call" or report.failed:
        passed = _CRITERIA.get(number, (title, True))[1] and report.passed
        _CRITERIA[number] = (title, passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}")
