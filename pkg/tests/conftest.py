import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pareto_tl.data import LabeledDataset

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_ds(X, Y, domain="d"):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    return LabeledDataset(domain, X, Y.reshape(X.shape[0], -1) if Y.ndim < 2 else Y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_task(rng):
    """Source (20 rows) and target (6 rows) with 3 inputs, 1 output, already in [0, 1]."""
    Xs = rng.random((20, 3))
    Xt = rng.random((6, 3))
    f = lambda X: 0.5 * X[:, 0] + 0.3 * X[:, 1] ** 2 + 0.1
    return make_ds(Xs, f(Xs) + 0.05, "src"), make_ds(Xt, f(Xt), "tgt")


# acceptance criteria bookkeeping: tests tagged ``@pytest.mark.criterion(n, title)``
# are folded into one PASS/FAIL/SKIP line per criterion in the terminal summary

_CRITERIA: dict = {}
_RANK = {"PASS": 0, "SKIP": 1, "FAIL": 2}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or (rep.when == "setup" and not rep.passed)):
        return
    if hasattr(rep, "wasxfail") or rep.failed:
        status = "FAIL"
    elif rep.skipped:
        status = "SKIP"
    else:
        status = "PASS"
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "status": "PASS", "notes": []})
    if _RANK[status] > _RANK[entry["status"]]:
        entry["status"] = status
    entry["notes"] += [str(v) for k, v in rep.user_properties if k == "detail"]
    if status != "PASS":
        entry["notes"].append(f"{item.name}: {status}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        terminalreporter.line(f"criterion {number}: {e['status']}  {e['title']}")
        for note in e["notes"]:
            terminalreporter.line(f"    {note}")
