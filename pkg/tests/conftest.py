import math

import numpy as np
import pytest

from probcascade import _backend
from probcascade.hierarchy import parse_hierarchy
from probcascade.linear import NodeClassifier, logit
from probcascade.strategies import HierModel

from oracles import ARTS_HEALTH_LINES, WORKED_PROBS

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def arts_health():
    return parse_hierarchy(ARTS_HEALTH_LINES)


def constant_model(h, probs, num_features=1):
    """HierModel whose node classifiers ignore the document and output ``probs``."""
    table = {n: NodeClassifier.constant(logit(p)) for n, p in probs.items()}
    return HierModel(h, table, num_features)


@pytest.fixture
def worked_model(arts_health):
    return constant_model(arts_health, WORKED_PROBS)


@pytest.fixture(params=_backend.available())
def kernels(request):
    return _backend.load(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def record(name: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS[name] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in ACCEPTANCE_RESULTS.items():
        line = f"{'PASS' if ok else 'FAIL'}  {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


def isclose_rel(a, b, rel):
    return math.isclose(a, b, rel_tol=rel, abs_tol=0.0)
