import json
import warnings

import numpy as np
import pytest

from devstrip import fixtures
from devstrip.mapping import init_identity
from devstrip.optimizer import solve_continuous, solve_discrete
from devstrip.preprocess import make_compatible, unit_box_scale
from devstrip.splines import BSplineCurve, KnotVector
from devstrip.energy import uniform_samples


def cox_de_boor(knots, i, p, t):
    """Naive recursive basis function, right-continuous with t == 1 closed."""
    U = knots
    if p == 0:
        if U[i] <= t < U[i + 1]:
            return 1.0
        # close the last nonempty span at the right end
        if t == U[-1] and U[i] < U[i + 1] == U[-1]:
            return 1.0
        return 0.0
    out = 0.0
    if U[i + p] > U[i]:
        out += (t - U[i]) / (U[i + p] - U[i]) * cox_de_boor(U, i, p - 1, t)
    if U[i + p + 1] > U[i + 1]:
        out += (U[i + p + 1] - t) / (U[i + p + 1] - U[i + 1]) * cox_de_boor(U, i + 1, p - 1, t)
    return out


def random_curve(rng, degree=3, n_ctrl=8, dim=3, interior=None):
    if interior is None:
        interior = np.sort(rng.uniform(0.05, 0.95, n_ctrl - degree - 1))
    knots = np.concatenate([[0.0] * (degree + 1), interior, [1.0] * (degree + 1)])
    return BSplineCurve(KnotVector(degree, knots), rng.uniform(0.0, 1.0, (len(knots) - degree - 1, dim)))


def prepared(pair):
    c1, c2 = make_compatible(*pair)
    return unit_box_scale(c1, c2)[:2]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fold():
    return prepared(fixtures.fold_pair())


@pytest.fixture(scope="session")
def helix():
    return prepared(fixtures.helix_pair())


@pytest.fixture(scope="session")
def cylinder():
    return make_compatible(*fixtures.cylinder_pair())


def _solve(pair):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return solve_continuous(*pair, init_identity(2, 50))


@pytest.fixture(scope="session")
def fold_solution(fold):
    return _solve(fold)


@pytest.fixture(scope="session")
def helix_solution(helix):
    return _solve(helix)


@pytest.fixture(scope="session")
def cylinder_solution(cylinder):
    return _solve(cylinder)


@pytest.fixture(scope="session")
def helix_discrete(helix):
    return solve_discrete(*helix, uniform_samples(50))


def write_curves(path, c1, c2):
    path.write_text(json.dumps({"c1": c1.to_dict(), "c2": c2.to_dict()}))
    return str(path)


#: One "criterion N: PASS/FAIL ..." line per acceptance criterion, in run order.
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
