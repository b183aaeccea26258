import numpy as np
import pytest

import minmarch as mm
from minmarch.derivatives import fd_gradient, fd_jacobian

from conftest import THETA_ADVDIFF, THETA_LOGISTIC


def test_quadratic_check_is_exact_to_roundoff(quadratic):
    report = mm.check_derivatives(quadratic, np.array([0.3]), np.array([0.1]))
    assert report.worst() <= 1e-7
    assert report.passed(1e-7)


def test_logistic_check(logistic):
    report = mm.check_derivatives(logistic, np.array([0.9]), THETA_LOGISTIC)
    assert report.worst() <= 1e-6


def test_advdiff_check_at_truth(advdiff):
    report = mm.check_derivatives(advdiff, np.array([0.05, 0.4]), THETA_ADVDIFF)
    assert report.worst() <= 1e-4


def test_fd_step_validation(quadratic):
    with pytest.raises(ValueError):
        mm.check_derivatives(quadratic, np.array([0.3]), np.array([0.1]), fd_step=0.0)


def test_fd_second_derivatives_quadratic(quadratic):
    H, B = mm.fd_second_derivatives(quadratic.gradient, np.array([0.3]), np.array([0.1]))
    np.testing.assert_allclose(H, [[1.0]], atol=1e-9)
    np.testing.assert_allclose(B, [[-1.0]], atol=1e-9)


def test_fd_second_derivatives_cubic(double_well):
    # oracle: expand g = m^3 - (t1+t2+0.5) m^2 + (0.5(t1+t2)+t1 t2) m - 0.5 t1 t2
    # and differentiate the expansion by hand
    m, (t1, t2) = 0.75, (0.3, 0.75)
    H_expected = 3 * m**2 - 2 * (t1 + t2 + 0.5) * m + 0.5 * (t1 + t2) + t1 * t2
    B_expected = np.array([-(m - 0.5) * (m - t2), -(m - t1) * (m - 0.5)])
    assert H_expected == pytest.approx(0.1125)

    H, B = mm.fd_second_derivatives(
        double_well.gradient, np.array([m]), np.array([t1, t2])
    )
    np.testing.assert_allclose(H, [[H_expected]], atol=1e-6)
    np.testing.assert_allclose(B, [B_expected], atol=1e-6)


def test_fd_second_derivatives_advdiff_vs_pure_objective_differences(advdiff):
    # oracle: 4-point second differences of J alone, no gradient involved
    m = np.array([0.06, 0.32])
    theta = THETA_ADVDIFF.copy()
    step = 1e-5

    def d2(i_kind, i, j_kind, j):
        def shifted(si, sj):
            mm_, th_ = m.copy(), theta.copy()
            (mm_ if i_kind == "m" else th_)[i] += si * step
            (mm_ if j_kind == "m" else th_)[j] += sj * step
            return advdiff.objective(mm_, th_)

        return (
            shifted(+1, +1) - shifted(+1, -1) - shifted(-1, +1) + shifted(-1, -1)
        ) / (4.0 * step**2)

    H_oracle = np.array([[d2("m", i, "m", j) for j in range(2)] for i in range(2)])
    B_oracle = np.array([[d2("m", i, "t", j) for j in range(3)] for i in range(2)])

    H, B = mm.fd_second_derivatives(advdiff.gradient, m, theta)
    np.testing.assert_allclose(H, H_oracle, rtol=1e-4, atol=1e-6)
    np.testing.assert_allclose(B, B_oracle, rtol=1e-4, atol=1e-6)


def test_degenerate_step_flagged(quadratic):
    # step so small the perturbed points collapse onto m itself
    with pytest.raises(mm.DegenerateStepError):
        mm.fd_second_derivatives(
            quadratic.gradient, np.array([0.3]), np.array([0.1]), fd_step=1e-300
        )


def test_evaluation_failure_propagates(advdiff):
    # kappa so small the FD perturbation crosses zero: the solver error
    # must surface, not be skipped
    with pytest.raises(mm.BvpSolveError):
        mm.check_derivatives(advdiff, np.array([1e-7, 0.4]), THETA_ADVDIFF)


def _random_points(problem, box, count, rng, fallback_m):
    for _ in range(count):
        if problem.basin_hint is not None:
            lo, hi = problem.basin_hint
            m = rng.uniform(lo, hi)
        else:
            m = fallback_m + rng.uniform(-0.3, 0.3, len(fallback_m))
        theta = box.nominal + box.half_widths * rng.uniform(-1.0, 1.0, box.p)
        yield m, theta


@pytest.mark.parametrize("name", ["quadratic", "cubic", "logistic1d", "advdiff"])
def test_gradient_fd_invariant_random_points(
    name, quadratic, double_well, logistic, advdiff,
    quadratic_box, cubic_box, logistic_box, advdiff_box,
):
    """Gradient matches FD of the objective at 20 random points per problem."""
    problem, box, fallback = {
        "quadratic": (quadratic, quadratic_box, np.array([0.3])),
        "cubic": (double_well, cubic_box, np.array([0.75])),
        "logistic1d": (logistic, logistic_box, np.array([0.9])),
        "advdiff": (advdiff, advdiff_box, np.array([0.05, 0.4])),
    }[name]
    rng = np.random.default_rng(17)
    for m, theta in _random_points(problem, box, 20, rng, fallback):
        g = problem.gradient(m, theta)
        g_fd = fd_gradient(lambda mm_: problem.objective(mm_, theta), m)
        denom = np.maximum(1.0, np.maximum(np.abs(g), np.abs(g_fd)))
        assert np.max(np.abs(g - g_fd) / denom) <= 1e-5


@pytest.mark.parametrize("name", ["cubic", "logistic1d", "advdiff"])
def test_symmetrized_hessian_close_to_raw_fd(
    name, double_well, logistic, advdiff, cubic_box, logistic_box, advdiff_box
):
    problem, box, m = {
        "cubic": (double_well, cubic_box, np.array([0.75])),
        "logistic1d": (logistic, logistic_box, np.array([0.9])),
        "advdiff": (advdiff, advdiff_box, np.array([0.05, 0.4])),
    }[name]
    H_raw = fd_jacobian(lambda mm_: problem.gradient(mm_, box.nominal), m)
    H_sym, _ = mm.fd_second_derivatives(problem.gradient, m, box.nominal)
    assert np.max(np.abs(H_sym - H_raw)) <= 1e-6
