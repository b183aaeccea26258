import numpy as np
import pytest

import minmarch as mm
from minmarch.marching import MarchStatus
from minmarch.uq import Statistic

from conftest import THETA_LOGISTIC


class TestKde:
    def test_standard_normal_density_at_origin(self):
        # oracle: closed-form N(0,1) density 1/sqrt(2 pi)
        rng = np.random.default_rng(0)
        values = rng.standard_normal(10000)
        grid = np.linspace(-5.0, 5.0, 1001)
        est = mm.kde(values, grid=(grid,))
        at_zero = est.density[500]
        assert abs(at_zero - 1.0 / np.sqrt(2 * np.pi)) <= 0.1 / np.sqrt(2 * np.pi)

    def test_bivariate_normal_density_at_origin(self):
        rng = np.random.default_rng(1)
        values = rng.standard_normal((10000, 2))
        axis = np.linspace(-4.0, 4.0, 201)
        est = mm.kde(values, grid=(axis, axis))
        at_zero = est.density[100, 100]
        assert abs(at_zero - 1.0 / (2 * np.pi)) <= 0.1 / (2 * np.pi)

    def test_integrates_to_one(self):
        rng = np.random.default_rng(2)
        est1 = mm.kde(rng.standard_normal(2000))
        assert abs(est1.integral() - 1.0) <= 1e-2
        est2 = mm.kde(rng.standard_normal((2000, 2)))
        assert abs(est2.integral() - 1.0) <= 1e-2

    def test_uniform_mass_concentrated_on_support(self):
        rng = np.random.default_rng(3)
        values = rng.uniform(0.0, 1.0, 5000)
        grid = np.linspace(-0.5, 1.5, 2001)
        est = mm.kde(values, grid=(grid,))
        inside = (grid >= 0.0) & (grid <= 1.0)
        mass = np.trapezoid(est.density[inside], grid[inside])
        assert mass >= 0.95

    def test_zero_variance_is_degenerate(self):
        with pytest.raises(mm.DegenerateBandwidthError):
            mm.kde(np.full(100, 3.7))

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            mm.kde(np.arange(10.0))

    def test_silverman_matches_hand_formula(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(500)
        q75, q25 = np.percentile(x, [75, 25])
        expected = 0.9 * min(np.std(x, ddof=1), (q75 - q25) / 1.34) * 500 ** (-0.2)
        assert mm.silverman_bandwidth(x) == pytest.approx(expected, rel=1e-12)


class TestPropagateStudy:
    def test_degenerate_box_reproduces_nominal(self, logistic):
        box = mm.ParameterBox(THETA_LOGISTIC, np.zeros(3))
        study = mm.propagate_study(logistic, box, 1, [1, 4], seed=0)
        nominal = study.nominal.minimizer
        for rec in study.records:
            for N in (1, 4):
                assert np.array_equal(rec.outcomes[N].final_state, nominal)
            assert np.array_equal(rec.oracle.minimizer, nominal)

    def test_nominal_failure_aborts(self, concave_problem):
        box = mm.ParameterBox.relative([0.5], 0.1)
        with pytest.raises(mm.NominalSolveError):
            mm.propagate_study(concave_problem, box, 3, [1], seed=0)

    def test_failures_recorded_not_fatal(self, fragile_problem):
        # half the box has theta_1 < 0 where the well inverts: marches abort,
        # oracles report non-convergence, the study itself completes
        box = mm.ParameterBox(np.array([1.0]), np.array([1.5]))
        study = mm.propagate_study(fragile_problem, box, 40, [4], seed=2)
        counts = study.failure_counts()
        assert counts["march_aborted"][4] > 0
        assert counts["newton_not_converged"] > 0
        aborted = [
            r for r in study.records if r.outcomes[4].status is not MarchStatus.COMPLETED
        ]
        assert all(r.outcomes[4].status is MarchStatus.ABORTED_INDEFINITE for r in aborted)
        assert study.valid_mask().sum() == 40 - len(
            {r.index for r in study.records if not r.oracle.converged}
            | {r.index for r in aborted}
        )

    def test_workers_do_not_change_results(self, logistic, logistic_box):
        serial = mm.propagate_study(logistic, logistic_box, 30, [1, 4], seed=9, workers=1)
        parallel = mm.propagate_study(logistic, logistic_box, 30, [1, 4], seed=9, workers=2)
        for a, b in zip(serial.records, parallel.records):
            assert np.array_equal(a.theta, b.theta)
            for N in (1, 4):
                assert np.array_equal(
                    a.outcomes[N].final_state, b.outcomes[N].final_state
                )
            assert np.array_equal(a.oracle.minimizer, b.oracle.minimizer)

    def test_bad_n_list(self, logistic, logistic_box):
        with pytest.raises(ValueError):
            mm.propagate_study(logistic, logistic_box, 2, [], seed=0)
        with pytest.raises(ValueError):
            mm.propagate_study(logistic, logistic_box, 2, [0, 2], seed=0)


class TestSummaryErrors:
    def test_quadratic_study_is_exact_and_flagged_degenerate(
        self, quadratic, quadratic_box
    ):
        study = mm.propagate_study(quadratic, quadratic_box, 200, [1, 2, 4], seed=5)
        summary = mm.summary_errors(study)
        assert np.all(summary.mean.errors <= 1e-13)
        assert np.all(summary.std.errors <= 1e-13)
        assert np.all(summary.per_sample.errors <= 1e-13)
        # errors at roundoff carry no rate: slope must be flagged unavailable
        assert np.all(np.isnan(summary.mean.slopes))
        assert summary.mean.statistic is Statistic.MEAN

    def test_logistic_study_first_order(self, logistic, logistic_box):
        study = mm.propagate_study(
            logistic, logistic_box, 800, [1, 2, 4, 8, 16], seed=5, workers=2
        )
        summary = mm.summary_errors(study)
        assert 0.8 <= summary.per_sample.slopes[0] <= 1.2
        # moment errors at N=16 are strictly smaller than at N=1
        assert summary.mean.errors[-1, 0] < summary.mean.errors[0, 0]
        assert summary.std.errors[-1, 0] < summary.std.errors[0, 0]

    def test_requires_oracle(self, logistic, logistic_box):
        study = mm.propagate_study(
            logistic, logistic_box, 40, [1], seed=5, with_oracle=False
        )
        with pytest.raises(ValueError):
            mm.summary_errors(study)

    def test_large_step_count_matches_oracle(self, logistic, logistic_box):
        study = mm.propagate_study(logistic, logistic_box, 100, [128], seed=21, workers=2)
        mask = study.valid_mask()
        assert mask.all()
        errs = np.linalg.norm(
            study.euler_finals(128) - study.oracle_minimizers(), axis=1
        )
        assert errs.max() <= 5e-3


class TestSensitivityLog:
    def test_zero_direction_rows_are_zero(self, logistic):
        box = mm.ParameterBox(THETA_LOGISTIC, np.zeros(3))
        study = mm.propagate_study(
            logistic, box, 1, [4], seed=0, record_trajectory=True
        )
        rows = mm.sensitivity_log(study)
        assert len(rows) == 4
        for row in rows:
            assert row.rhs_norm == 0.0
            np.testing.assert_array_equal(row.rhs, [0.0])

    def test_quadratic_rows_constant(self, quadratic, quadratic_box):
        study = mm.propagate_study(
            quadratic, quadratic_box, 3, [4], seed=8, record_trajectory=True
        )
        for rec in study.records:
            dtheta1 = rec.theta[0] - quadratic_box.nominal[0]
            rows = [r for r in mm.sensitivity_log(study, N=4) if r.sample_index == rec.index]
            assert len(rows) == 4
            for row in rows:
                assert row.rhs[0] == pytest.approx(dtheta1, rel=1e-13)

    def test_logistic_rows_vary_smoothly(self, logistic, logistic_box):
        study = mm.propagate_study(
            logistic, logistic_box, 5, [16], seed=8, record_trajectory=True
        )
        rows = mm.sensitivity_log(study)
        assert all(np.isfinite(r.rhs_norm) for r in rows)
        for rec in study.records:
            f = np.array(
                [r.rhs[0] for r in rows if r.sample_index == rec.index]
            )
            scale = 1.0 + np.max(np.abs(f))
            assert np.max(np.abs(np.diff(f))) <= 0.3 * scale

    def test_requires_recorded_trajectories(self, logistic, logistic_box):
        study = mm.propagate_study(logistic, logistic_box, 2, [2], seed=0)
        with pytest.raises(ValueError):
            mm.sensitivity_log(study)


def test_study_serialization_roundtrip(tmp_path, logistic, logistic_box):
    from minmarch.reporting import load_study, save_study

    study = mm.propagate_study(logistic, logistic_box, 60, [1, 4, 16], seed=3)
    path = tmp_path / "study.json"
    save_study(path, study)
    loaded = load_study(path)

    before = mm.summary_errors(study)
    after = mm.summary_errors(loaded)
    for stat in ("mean", "std", "per_sample"):
        np.testing.assert_array_equal(
            getattr(before, stat).errors, getattr(after, stat).errors
        )
        np.testing.assert_array_equal(
            getattr(before, stat).slopes, getattr(after, stat).slopes
        )
    assert loaded.to_dict() == study.to_dict()


def test_fit_loglog_slope_edge_cases():
    h = np.array([1.0, 0.5, 0.25, 0.125])
    assert mm.fit_loglog_slope(h, 0.3 * h) == pytest.approx(1.0, abs=1e-12)
    assert np.isnan(mm.fit_loglog_slope(h, np.zeros(4)))
    assert np.isnan(mm.fit_loglog_slope(h[:2], 0.3 * h[:2]))
    with_nan = np.array([0.3, np.nan, 0.075, 0.0375])
    assert mm.fit_loglog_slope(h, with_nan) == pytest.approx(1.0, abs=1e-12)
