import pytest

from simul_decode import HashModel, load_tabular_model
from simul_decode.scorer import bundled_model_path


@pytest.fixture(scope="session")
def garden_path():
    return load_tabular_model(bundled_model_path("garden_path"))


@pytest.fixture(scope="session")
def chain():
    return load_tabular_model(bundled_model_path("chain"))


def hash_models(n, vocab_size, start=1000, **kw):
    return [HashModel(start + i, vocab_size, **kw) for i in range(n)]


# --- acceptance summary ------------------------------------------------------

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = "; ".join(str(v) for k, v in report.user_properties if k == "detail")
        _ACCEPTANCE[report.nodeid] = (report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (outcome, detail) in _ACCEPTANCE.items():
        name = nodeid.split("::")[-1]
        line = f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
