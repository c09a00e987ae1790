from pathlib import Path

import pytest

from offdetect.corpus import make_synthetic_dataset, write_olid_tsv

DATA = Path(__file__).parent / "data"

_ACCEPTANCE = {}


@pytest.fixture
def olid_small():
    return DATA / "olid_small.tsv"


@pytest.fixture
def fixture50(tmp_path):
    """A 50-row labeled Task A file."""
    path = tmp_path / "fixture50.tsv"
    write_olid_tsv(make_synthetic_dataset(n=50, seed=7), path)
    return path


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_criterion_"):
        return
    key = int(name.split("_")[2])
    if report.when == "call" or report.skipped:
        outcome = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        prev = _ACCEPTANCE.get(key, {})
        prev[name] = outcome
        _ACCEPTANCE[key] = prev
    elif report.failed:
        _ACCEPTANCE.setdefault(key, {})[name] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE):
        outcomes = _ACCEPTANCE[key]
        if "FAIL" in outcomes.values():
            verdict = "FAIL"
        elif all(v == "SKIP" for v in outcomes.values()):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        detail = ", ".join(f"{n.split('_', 3)[-1]}={v}" for n, v in sorted(outcomes.items()))
        terminalreporter.write_line(f"criterion {key}: {verdict} ({detail})")
