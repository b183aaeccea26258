import numpy as np
import pytest

import minmarch as mm

THETA_LOGISTIC = np.array([1.0, 3.0, 0.1])
THETA_ADVDIFF = np.array([10.0, 0.05, 1.0])


@pytest.fixture(scope="session")
def quadratic():
    return mm.QuadraticProblem()


@pytest.fixture(scope="session")
def double_well():
    return mm.DoubleWellProblem()


@pytest.fixture(scope="session")
def logistic():
    return mm.LogisticWellProblem()


@pytest.fixture(scope="session")
def advdiff():
    return mm.make_advdiff_problem()


@pytest.fixture(scope="session")
def quadratic_box():
    return mm.ParameterBox.relative(np.array([0.4]), 0.40)


@pytest.fixture(scope="session")
def cubic_box():
    return mm.ParameterBox(np.array([0.3, 0.75]), np.array([0.1, 0.1]))


@pytest.fixture(scope="session")
def logistic_box():
    return mm.ParameterBox.relative(THETA_LOGISTIC, 0.40)


@pytest.fixture(scope="session")
def advdiff_box():
    return mm.ParameterBox.relative(THETA_ADVDIFF, 0.20)


class ConcaveProblem(mm.Problem):
    """J = -0.5 m^2 + theta m: every stationary point is a maximum."""

    d = 1
    p = 1
    basin_hint = None

    def objective(self, m, theta):
        return -0.5 * m[0] ** 2 + theta[0] * m[0]

    def gradient(self, m, theta):
        return np.array([-m[0] + theta[0]])

    def hessian(self, m, theta):
        return np.array([[-1.0]])

    def mixed(self, m, theta):
        return np.array([[1.0]])

    def initial_guess(self):
        return np.array([0.0])


class FragileProblem(mm.Problem):
    """Quadratic bowl that loses positive definiteness for theta_1 <= 0.

    J = 0.5 theta_1 m^2: the minimizer is 0 while theta_1 > 0, and the
    stationary point turns into a maximizer across theta_1 = 0.  Used to
    exercise abort/failure accounting.
    """

    d = 1
    p = 1
    basin_hint = None

    def objective(self, m, theta):
        return 0.5 * theta[0] * m[0] ** 2

    def gradient(self, m, theta):
        return np.array([theta[0] * m[0]])

    def hessian(self, m, theta):
        return np.array([[theta[0]]])

    def mixed(self, m, theta):
        return np.array([[m[0]]])

    def initial_guess(self):
        return np.array([0.0])


@pytest.fixture
def concave_problem():
    return ConcaveProblem()


@pytest.fixture
def fragile_problem():
    return FragileProblem()
