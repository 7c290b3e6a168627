import numpy as np
import pytest

from avqoe.dataset import Dataset, aggregate_mos, build_dataset
from avqoe.domain import builtin_source_profiles, generate_condition_matrix
from avqoe.synth import OracleConfig, synthesize_metadata, synthesize_ratings


@pytest.fixture(scope="session")
def matrix():
    return generate_condition_matrix()


@pytest.fixture(scope="session")
def profiles():
    return builtin_source_profiles()


@pytest.fixture(scope="session")
def synthetic_dataset(matrix, profiles):
    config = OracleConfig(seed=0)
    ratings = synthesize_ratings(matrix, profiles, config)
    return build_dataset(
        matrix, profiles, synthesize_metadata(matrix, profiles, 0), aggregate_mos(ratings)
    )


def make_dataset(X, y, names=None, ci=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    names = names or [f"f{i}" for i in range(X.shape[1])]
    ids = [f"c{i:03d}" for i in range(X.shape[0])]
    return Dataset(tuple(names), tuple(ids), X, np.asarray(y, dtype=float), ci)


# --- acceptance summary: one PASS/FAIL line per criterion -------------------

_criteria = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = _CRITERION_MARKS.get(report.nodeid)
    if marker is None:
        return
    number, title = marker
    ok = report.outcome == "passed"
    prev = _criteria.get(number, (title, True))
    _criteria[number] = (title, prev[1] and ok)


_CRITERION_MARKS = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _CRITERION_MARKS[item.nodeid] = tuple(m.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"AC{number:>2} {'PASS' if ok else 'FAIL'}  {title}")
