"""Kaplan-Meier and Cox regression against independent oracles."""

import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from lvef_fusion.errors import (
    DegenerateDataError,
    DomainError,
    EmptyInputError,
    InvalidParameterError,
    InvalidStateError,
    NonConvergenceError,
    SeparationError,
)
from lvef_fusion.survival import (
    CoxFit,
    SurvivalRecord,
    cox_fit,
    cox_fit_from_arrays,
    cox_loglik_from_arrays,
    cox_partial_loglik,
    hazard_ratio_per,
    km_estimate,
    km_event_rate_at,
    km_from_arrays,
    km_survival_at,
)


def _counting_survival(times, horizon):
    """Uncensored oracle: S(t) is simply the fraction still beyond t."""
    times = np.asarray(times, dtype=float)
    return np.mean(times > horizon)


def _simulated_cohort(rng, n, beta=-0.05, censor=365.0):
    x = rng.uniform(20.0, 80.0, n)
    rate = 2e-3 * np.exp(beta * (x - 50.0))
    raw = rng.exponential(1.0 / rate)
    event = (raw < censor).astype(int)
    time = np.where(event == 1, raw, censor)
    return time, event, x


class TestKaplanMeier:
    def test_single_event(self):
        curve = km_estimate([SurvivalRecord(5.0, 1)])
        assert curve.times.tolist() == [5.0]
        assert curve.survival.tolist() == [0.0]
        assert curve.at_risk.tolist() == [1]
        assert curve.events.tolist() == [1]

    def test_three_records_with_trailing_censor(self):
        records = [SurvivalRecord(1.0, 1), SurvivalRecord(2.0, 1), SurvivalRecord(3.0, 0)]
        curve = km_estimate(records)
        assert curve.times.tolist() == [1.0, 2.0]
        assert curve.survival.tolist() == [2.0 / 3.0, 1.0 / 3.0]
        assert curve.at_risk.tolist() == [3, 2]

    def test_censor_tied_with_event_stays_at_risk(self):
        # censoring at an event time counts toward that time's risk set
        curve = km_estimate([SurvivalRecord(1.0, 1), SurvivalRecord(1.0, 0)])
        assert curve.at_risk.tolist() == [2]
        assert curve.survival.tolist() == [0.5]

    def test_earlier_censor_shrinks_risk_set(self):
        curve = km_estimate([SurvivalRecord(1.0, 0), SurvivalRecord(2.0, 1)])
        assert curve.at_risk.tolist() == [1]
        assert curve.survival.tolist() == [0.0]

    def test_matches_counting_oracle_exactly_without_censoring(self):
        rng = np.random.default_rng(404)
        for _ in range(200):
            n = int(rng.integers(1, 40))
            # integer-valued times force heavy ties
            times = rng.integers(1, 12, n).astype(float)
            curve = km_from_arrays(times, np.ones(n, dtype=int))
            for t, s in zip(curve.times, curve.survival):
                assert s == _counting_survival(times, t)

    def test_survival_is_monotone_within_unit_interval(self):
        rng = np.random.default_rng(11)
        times = rng.exponential(100.0, 300)
        event = rng.integers(0, 2, 300)
        if event.sum() == 0:
            event[0] = 1
        curve = km_from_arrays(times, event)
        assert np.all(np.diff(curve.survival) <= 0)
        assert np.all((curve.survival >= 0) & (curve.survival <= 1))

    def test_step_evaluation_is_right_continuous(self):
        curve = km_estimate([SurvivalRecord(1.0, 1), SurvivalRecord(2.0, 1),
                             SurvivalRecord(3.0, 0)])
        assert km_survival_at(curve, 0.5) == 1.0
        assert km_survival_at(curve, 1.0) == pytest.approx(2.0 / 3.0)
        assert km_survival_at(curve, 1.5) == pytest.approx(2.0 / 3.0)
        assert km_survival_at(curve, 2.0) == pytest.approx(1.0 / 3.0)
        assert km_survival_at(curve, 99.0) == pytest.approx(1.0 / 3.0)

    def test_array_evaluation_matches_scalars(self):
        curve = km_estimate([SurvivalRecord(1.0, 1), SurvivalRecord(2.0, 1)])
        grid = np.array([0.5, 1.0, 1.7, 2.4])
        vec = km_survival_at(curve, grid)
        assert vec.tolist() == [km_survival_at(curve, t) for t in grid]

    def test_event_rate_complements_survival(self):
        curve = km_estimate([SurvivalRecord(10.0, 1), SurvivalRecord(20.0, 0)])
        assert km_event_rate_at(curve, 15.0) == pytest.approx(0.5)
        with pytest.raises(InvalidParameterError):
            km_event_rate_at(curve, 0.0)

    def test_input_validation(self):
        with pytest.raises(EmptyInputError):
            km_estimate([])
        with pytest.raises(DomainError):
            km_from_arrays(np.array([0.0]), np.array([1]))
        with pytest.raises(DomainError):
            km_from_arrays(np.array([np.nan]), np.array([1]))


class TestCoxObjective:
    def test_two_record_hand_oracle_at_zero(self):
        # risk set {both} at t=1 then {second} at t=2, covariate 1 vs 0
        records = [SurvivalRecord(1.0, 1, 1.0), SurvivalRecord(2.0, 1, 0.0)]
        value, gradient, hessian = cox_partial_loglik(0.0, records)
        assert value == pytest.approx(-math.log(2.0), rel=1e-15)
        assert gradient == pytest.approx(0.5, rel=1e-15)
        assert hessian == pytest.approx(-0.25, rel=1e-15)

    def test_shift_invariance_of_objective(self):
        rng = np.random.default_rng(2)
        time, event, x = _simulated_cohort(rng, 120)
        for beta in (-0.3, 0.0, 0.2):
            a = cox_loglik_from_arrays(beta, time, event, x)
            b = cox_loglik_from_arrays(beta, time, event, x + 500.0)
            assert a[0] == pytest.approx(b[0], rel=1e-11)
            assert a[1] == pytest.approx(b[1], rel=1e-9, abs=1e-11)

    def test_derivatives_match_finite_differences(self):
        rng = np.random.default_rng(31)
        h = 1e-5
        for _ in range(20):
            time, event, x = _simulated_cohort(rng, 150)
            beta = float(rng.uniform(-0.2, 0.2))
            v_minus, g_minus, _ = cox_loglik_from_arrays(beta - h, time, event, x)
            value, gradient, hessian = cox_loglik_from_arrays(beta, time, event, x)
            v_plus, g_plus, _ = cox_loglik_from_arrays(beta + h, time, event, x)
            fd_gradient = (v_plus - v_minus) / (2 * h)
            fd_hessian = (g_plus - g_minus) / (2 * h)
            assert gradient == pytest.approx(fd_gradient, rel=1e-6, abs=1e-8)
            assert hessian == pytest.approx(fd_hessian, rel=1e-5, abs=1e-8)

    def test_concave_in_beta(self):
        rng = np.random.default_rng(8)
        time, event, x = _simulated_cohort(rng, 100)
        for beta in np.linspace(-1.0, 1.0, 9):
            assert cox_loglik_from_arrays(beta, time, event, x)[2] <= 0.0

    def test_zero_events_is_degenerate(self):
        with pytest.raises(DegenerateDataError):
            cox_loglik_from_arrays(0.0, np.array([1.0, 2.0]), np.array([0, 0]),
                                   np.array([1.0, 2.0]))


class TestCoxFit:
    def test_matches_independent_optimizer(self):
        rng = np.random.default_rng(77)
        for _ in range(10):
            time, event, x = _simulated_cohort(rng, 250)
            fit = cox_fit_from_arrays(time, event, x)
            oracle = minimize_scalar(
                lambda b: -cox_loglik_from_arrays(b, time, event, x)[0],
                bounds=(-2.0, 2.0), method="bounded",
                options={"xatol": 1e-12},
            )
            assert fit.beta == pytest.approx(oracle.x, abs=1e-6)

    def test_fit_satisfies_stationarity_and_curvature(self):
        rng = np.random.default_rng(5)
        time, event, x = _simulated_cohort(rng, 300)
        fit = cox_fit_from_arrays(time, event, x)
        value, gradient, hessian = cox_loglik_from_arrays(fit.beta, time, event, x)
        assert fit.converged
        assert abs(gradient) < 1e-8
        assert fit.log_partial_likelihood == value
        assert fit.standard_error == pytest.approx(1.0 / math.sqrt(-hessian))

    def test_recovers_generative_slope(self):
        rng = np.random.default_rng(123)
        time, event, x = _simulated_cohort(rng, 4000, beta=-0.05)
        fit = cox_fit_from_arrays(time, event, x)
        assert fit.beta == pytest.approx(-0.05, abs=3 * fit.standard_error)

    def test_scale_equivariance(self):
        rng = np.random.default_rng(9)
        time, event, x = _simulated_cohort(rng, 200)
        base = cox_fit_from_arrays(time, event, x)
        scaled = cox_fit_from_arrays(time, event, 2.0 * x + 10.0)
        assert scaled.beta == pytest.approx(base.beta / 2.0, rel=1e-7)

    def test_record_interface_matches_array_interface(self):
        rng = np.random.default_rng(14)
        time, event, x = _simulated_cohort(rng, 80)
        records = [SurvivalRecord(t, int(e), c) for t, e, c in zip(time, event, x)]
        assert cox_fit(records).beta == cox_fit_from_arrays(time, event, x).beta

    def test_perfect_separation_raises(self):
        # earliest events carry the lowest covariate values on a tiny scale,
        # so the internal standardized fit runs beta off to the bound
        time = np.array([10.0, 20.0, 400.0, 400.0])
        event = np.array([1, 1, 0, 0])
        x = np.array([21.000, 21.005, 21.010, 21.015])
        with pytest.raises(SeparationError):
            cox_fit_from_arrays(time, event, x)

    def test_nonconvergence_carries_last_fit(self):
        rng = np.random.default_rng(21)
        time, event, x = _simulated_cohort(rng, 300)
        with pytest.raises(NonConvergenceError) as excinfo:
            cox_fit_from_arrays(time, event, x, max_iterations=1)
        last = excinfo.value.last_fit
        assert last is not None and not last.converged
        assert last.iterations == 1

    def test_degenerate_inputs(self):
        time = np.array([1.0, 2.0, 3.0])
        with pytest.raises(DegenerateDataError):
            cox_fit_from_arrays(time, np.array([1, 0, 0]), np.array([1.0, 2.0, 3.0]))
        with pytest.raises(DegenerateDataError):
            cox_fit_from_arrays(time, np.array([1, 1, 0]), np.array([4.0, 4.0, 4.0]))
        with pytest.raises(InvalidParameterError):
            cox_fit_from_arrays(time, np.array([1, 1, 0]), np.array([1.0, 2.0, 3.0]),
                                tolerance=0.0)


class TestHazardRatio:
    def _fit(self):
        rng = np.random.default_rng(55)
        time, event, x = _simulated_cohort(rng, 400)
        return cox_fit_from_arrays(time, event, x)

    def test_per_decrease_algebra(self):
        fit = self._fit()
        hr, lower, upper = hazard_ratio_per(fit, 5.0)
        assert hr == pytest.approx(math.exp(-5.0 * fit.beta))
        assert lower == pytest.approx(math.exp(-5.0 * fit.beta - 1.96 * 5.0 * fit.standard_error))
        assert upper == pytest.approx(math.exp(-5.0 * fit.beta + 1.96 * 5.0 * fit.standard_error))
        assert lower < hr < upper

    def test_protective_covariate_gives_ratio_above_one(self):
        fit = self._fit()
        assert fit.beta < 0
        hr, _, _ = hazard_ratio_per(fit, 5.0)
        assert hr > 1.0

    def test_unconverged_fit_is_rejected(self):
        stub = CoxFit(beta=-0.1, standard_error=0.02, iterations=100,
                      converged=False, log_partial_likelihood=-10.0)
        with pytest.raises(InvalidStateError):
            hazard_ratio_per(stub, 5.0)

    def test_zero_delta_is_rejected(self):
        with pytest.raises(InvalidParameterError):
            hazard_ratio_per(self._fit(), 0.0)


class TestSurvivalRecord:
    @pytest.mark.parametrize("time", [0.0, -1.0, float("nan"), float("inf")])
    def test_time_domain(self, time):
        with pytest.raises(DomainError):
            SurvivalRecord(time, 1)

    def test_event_flag_domain(self):
        with pytest.raises(InvalidParameterError):
            SurvivalRecord(1.0, 2)

    def test_covariate_must_be_finite(self):
        with pytest.raises(InvalidParameterError):
            SurvivalRecord(1.0, 1, float("nan"))
