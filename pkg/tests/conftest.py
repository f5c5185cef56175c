import numpy as np
import pytest

from grhilbert import OperatorNormBall, Polytope, PositiveHalfCone


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture(scope="session")
def ball22():
    return OperatorNormBall(2, 2)


@pytest.fixture(scope="session")
def ball33():
    return OperatorNormBall(3, 3)


@pytest.fixture(scope="session")
def disk():
    # Euclidean unit disk: the p = 1, q = 2 operator ball.
    return OperatorNormBall(2, 1)


@pytest.fixture(scope="session")
def interval():
    return OperatorNormBall(1, 1)


@pytest.fixture(scope="session")
def half_cone2():
    return PositiveHalfCone(2)


def make_box(q, p, half_width=0.4):
    """Axis box |X_ij| < half_width as a polytope body."""
    functionals = []
    for i in range(q):
        for j in range(p):
            normal = np.zeros((q, p))
            normal[i, j] = 1.0
            functionals.append((normal.copy(), half_width))
            functionals.append((-normal, half_width))
    return Polytope(q, p, functionals)


@pytest.fixture(scope="session")
def box22():
    return make_box(2, 2)


@pytest.fixture(scope="session")
def simplex2():
    # Open triangle {x > 0, y > 0, x + y < 1} in the p = 1, q = 2 chart.
    e1 = np.array([[1.0], [0.0]])
    e2 = np.array([[0.0], [1.0]])
    return Polytope(2, 1, [(e1, 0.0), (e2, 0.0), (-(e1 + e2), 1.0)])


def col(*values):
    return np.array([[float(v)] for v in values])
