import numpy as np
import pytest

from reflexive.families import dumbbell_field, stacked_field
from reflexive.homology_config import ConfigurationDatum

ELL = 0.5


def make_datum(edges, iota, tau, *, genus, punctures=0, sigma=None, relations=(), extra=(), e0=None):
    return ConfigurationDatum.from_dict({
        "genus": genus,
        "punctures": punctures,
        "edges": list(edges),
        "iota": {e: list(v) for e, v in iota.items()},
        "relations": [list(r) for r in relations],
        "extra_linear_constraints": [list(r) for r in extra],
        "tau": dict(tau),
        "sigma": dict(sigma) if sigma is not None else {e: e for e in edges},
        "e0": e0,
    })


@pytest.fixture
def dumbbell_datum():
    eye = np.eye(4, dtype=int)
    edges = ["a1", "a2", "b1", "b2"]
    return make_datum(edges, {e: eye[k] for k, e in enumerate(edges)},
                      {"a1": "h", "a2": "h", "b1": "v", "b2": "v"},
                      extra=[[1.0, -1.0, 0.0, 0.0]], genus=2, punctures=0, e0="a1")


@pytest.fixture
def toy_datum():
    # E = {e1(h), e2(v)}, iota = identity on a genus-1 lattice
    return make_datum(["e1", "e2"], {"e1": [1, 0], "e2": [0, 1]}, {"e1": "h", "e2": "v"},
                      genus=1, punctures=0)


@pytest.fixture
def dumbbell():
    return dumbbell_field(ELL)


@pytest.fixture
def stacked():
    return stacked_field()


_criteria = {}


def pytest_collection_modifyitems(config, items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            number, title = value
            prev = _criteria.get(number, (title, True))
            _criteria[number] = (title, prev[1] and report.outcome == "passed")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
