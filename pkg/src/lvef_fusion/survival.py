"""Right-censored survival analysis from scratch.

Two estimators, both written directly against their definitions:

* Kaplan-Meier product-limit curves.  The survival products are accumulated as
  exact integer numerator/denominator pairs with one correctly-rounded float
  division per event time, so in the uncensored case the curve coincides
  bit-for-bit with the empirical survival function.
* Single-covariate Cox proportional hazards with the Breslow tie convention,
  fitted by Newton-Raphson with step halving.  Risk-set sums use one global
  exponent shift so the objective stays finite for any reasonable beta, and
  the covariate is standardized internally for conditioning (the partial
  likelihood is exactly invariant to centering; scaling is undone on output).

Ties between events and censorings at the same time follow the standard
convention: events first, censored subjects stay in the risk set at their own
censoring time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDataError,
    DomainError,
    EmptyInputError,
    InvalidParameterError,
    InvalidStateError,
    NonConvergenceError,
    SeparationError,
)

__all__ = [
    "SurvivalRecord",
    "KmCurve",
    "CoxFit",
    "km_estimate",
    "km_from_arrays",
    "km_survival_at",
    "km_event_rate_at",
    "cox_partial_loglik",
    "cox_loglik_from_arrays",
    "cox_fit",
    "cox_fit_from_arrays",
    "hazard_ratio_per",
]

SEPARATION_BOUND = 50.0


@dataclass(frozen=True)
class SurvivalRecord:
    """One subject: follow-up time in days, event flag, LVEF covariate."""

    time: float
    event: int
    covariate: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.time) and self.time > 0):
            raise DomainError(f"time must be finite and > 0, got {self.time!r}")
        if self.event not in (0, 1):
            raise InvalidParameterError(f"event must be 0 or 1, got {self.event!r}")
        if not np.isfinite(self.covariate):
            raise InvalidParameterError(f"covariate must be finite, got {self.covariate!r}")


@dataclass(frozen=True)
class KmCurve:
    """Product-limit curve evaluated at the distinct event times."""

    times: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray


@dataclass(frozen=True)
class CoxFit:
    """Newton-Raphson result for the single-covariate Cox model."""

    beta: float
    standard_error: float
    iterations: int
    converged: bool
    log_partial_likelihood: float


def _records_to_arrays(records):
    records = list(records)
    if not records:
        raise EmptyInputError("at least one survival record is required")
    time = np.array([r.time for r in records], dtype=float)
    event = np.array([r.event for r in records], dtype=np.int64)
    covariate = np.array([r.covariate for r in records], dtype=float)
    return time, event, covariate


def km_from_arrays(time: np.ndarray, event: np.ndarray) -> KmCurve:
    """Kaplan-Meier from parallel arrays (fast path used by propagation)."""
    time = np.asarray(time, dtype=float)
    event = np.asarray(event, dtype=np.int64)
    if time.size == 0:
        raise EmptyInputError("at least one survival record is required")
    if not np.all(np.isfinite(time)) or np.any(time <= 0):
        raise DomainError("all times must be finite and > 0")

    order = np.argsort(time, kind="stable")
    t, e = time[order], event[order]
    n = t.size
    first = np.flatnonzero(np.r_[True, t[1:] != t[:-1]])
    deaths = np.add.reduceat(e, first)
    at_risk = n - first
    keep = deaths > 0

    event_times = t[first[keep]]
    d_counts = deaths[keep]
    r_counts = at_risk[keep]

    survival = np.empty(event_times.size)
    num, den = 1, 1
    for i, (r, d) in enumerate(zip(r_counts.tolist(), d_counts.tolist())):
        num *= r - d
        den *= r
        survival[i] = num / den
    return KmCurve(
        times=event_times,
        survival=survival,
        at_risk=r_counts.astype(np.int64),
        events=d_counts.astype(np.int64),
    )


def km_estimate(records) -> KmCurve:
    """Product-limit estimator over a sequence of SurvivalRecord."""
    time, event, _ = _records_to_arrays(records)
    return km_from_arrays(time, event)


def km_survival_at(curve: KmCurve, horizon):
    """S(horizon) with right-continuous step evaluation; scalar or array."""
    idx = np.searchsorted(curve.times, horizon, side="right")
    padded = np.r_[1.0, curve.survival]
    result = padded[idx]
    return float(result) if np.isscalar(horizon) else result


def km_event_rate_at(curve: KmCurve, horizon: float) -> float:
    """Cumulative event probability 1 - S(horizon)."""
    if not horizon > 0:
        raise InvalidParameterError(f"horizon must be > 0, got {horizon!r}")
    return 1.0 - km_survival_at(curve, horizon)


class _CoxLayout:
    """Time-sorted event layout, shared by every objective evaluation."""

    def __init__(self, time: np.ndarray, event: np.ndarray):
        if time.size == 0:
            raise EmptyInputError("at least one survival record is required")
        if int(event.sum()) == 0:
            raise DegenerateDataError("partial likelihood undefined with zero events")
        self.order = np.argsort(time, kind="stable")
        t = time[self.order]
        self.e = event[self.order].astype(float)
        self.first = np.flatnonzero(np.r_[True, t[1:] != t[:-1]])
        deaths = np.add.reduceat(self.e, self.first)
        self.keep = deaths > 0
        self.deaths = deaths[self.keep]

    def evaluate(self, beta: float, xc: np.ndarray):
        """(value, gradient, hessian) for a centered, time-sorted covariate.

        Risk-set sums are suffix cumsums read at tie-group starts, with one
        global exponent shift so values stay finite for betas far beyond any
        plausible fit.
        """
        eta = beta * xc
        shift = eta.max()
        w = np.exp(eta - shift)
        wx = w * xc
        s0 = np.cumsum(w[::-1])[::-1][self.first][self.keep]
        s1 = np.cumsum(wx[::-1])[::-1][self.first][self.keep]
        s2 = np.cumsum((wx * xc)[::-1])[::-1][self.first][self.keep]
        sum_event_x = float(np.dot(self.e, xc))

        with np.errstate(divide="ignore", invalid="ignore"):
            log_s0 = np.log(s0)
            mean_x = s1 / s0
            var_x = np.maximum(s2 / s0 - mean_x**2, 0.0)

        value = float(beta * sum_event_x - np.sum(self.deaths * (log_s0 + shift)))
        gradient = float(sum_event_x - np.sum(self.deaths * mean_x))
        hessian = float(-np.sum(self.deaths * var_x))
        return value, gradient, hessian


def cox_loglik_from_arrays(beta: float, time, event, covariate):
    """Breslow partial log-likelihood with analytic dbeta and d2beta.

    The covariate is centered internally; the objective is exactly invariant
    to that shift, and the centered form conditions the risk-set sums.
    """
    time = np.asarray(time, dtype=float)
    event = np.asarray(event, dtype=np.int64)
    covariate = np.asarray(covariate, dtype=float)
    layout = _CoxLayout(time, event)
    xc = (covariate - covariate.mean())[layout.order]
    return layout.evaluate(beta, xc)


def cox_partial_loglik(beta: float, records):
    """(value, gradient, hessian) of the Breslow partial log-likelihood."""
    time, event, covariate = _records_to_arrays(records)
    return cox_loglik_from_arrays(beta, time, event, covariate)


def cox_fit_from_arrays(time, event, covariate, tolerance: float = 1e-8,
                        max_iterations: int = 100) -> CoxFit:
    """Newton-Raphson Cox fit from parallel arrays (fast path)."""
    time = np.asarray(time, dtype=float)
    event = np.asarray(event, dtype=np.int64)
    covariate = np.asarray(covariate, dtype=float)
    if not (np.isfinite(tolerance) and tolerance > 0):
        raise InvalidParameterError(f"tolerance must be > 0, got {tolerance!r}")
    if max_iterations < 1:
        raise InvalidParameterError(f"max_iterations must be >= 1, got {max_iterations!r}")
    if int(event.sum()) < 2:
        raise DegenerateDataError("cox_fit requires at least 2 events")
    if np.ptp(covariate) == 0:
        raise DegenerateDataError("cox_fit requires a non-constant covariate")

    layout = _CoxLayout(time, event)
    # Fit on the standardized covariate; beta maps back by 1/sd.
    sd = float(np.std(covariate))
    xs = ((covariate - covariate.mean()) / sd)[layout.order]
    xc_raw = (covariate - covariate.mean())[layout.order]

    beta_s = 0.0
    value, grad, hess = layout.evaluate(beta_s, xs)
    # Internal threshold is tightened so the final raw-scale gradient check
    # (tolerance on beta's own scale) passes after the back-transform.
    tol_s = 0.5 * tolerance / sd
    iterations = 0
    while iterations < max_iterations and abs(grad) >= tol_s:
        iterations += 1
        step = -grad / hess if hess < 0 else math.copysign(1.0, grad)
        candidate = beta_s + step
        cand = layout.evaluate(candidate, xs)
        # Step halving guards against overshoot; the slack keeps float-level
        # "decreases" near the optimum from being fought forever.
        slack = 1e-10 * (1.0 + abs(value))
        halvings = 0
        while (not np.isfinite(cand[0]) or cand[0] < value - slack) and halvings < 30:
            step *= 0.5
            candidate = beta_s + step
            cand = layout.evaluate(candidate, xs)
            halvings += 1
        if candidate == beta_s:
            break  # step below float resolution: no further progress possible
        if abs(candidate / sd) > SEPARATION_BOUND:
            raise SeparationError(
                f"|beta| exceeded {SEPARATION_BOUND}: monotone partial likelihood "
                "(perfect separation of event order by the covariate)"
            )
        beta_s = candidate
        value, grad, hess = cand

    beta = beta_s / sd
    raw_value, raw_grad, raw_hess = layout.evaluate(beta, xc_raw)
    converged = abs(raw_grad) < tolerance
    se = 1.0 / math.sqrt(-raw_hess) if raw_hess < 0 else math.nan
    fit = CoxFit(
        beta=beta,
        standard_error=se,
        iterations=iterations,
        converged=converged,
        log_partial_likelihood=raw_value,
    )
    if not converged:
        raise NonConvergenceError(
            f"no convergence in {max_iterations} iterations (|gradient| = {abs(raw_grad):.3e})",
            last_fit=fit,
        )
    return fit


def cox_fit(records, tolerance: float = 1e-8, max_iterations: int = 100) -> CoxFit:
    """Fit the single-covariate Cox model on a sequence of SurvivalRecord."""
    time, event, covariate = _records_to_arrays(records)
    return cox_fit_from_arrays(time, event, covariate, tolerance, max_iterations)


def hazard_ratio_per(fit: CoxFit, delta: float):
    """Hazard ratio for a `delta`-point DECREASE in LVEF with Wald 95% CI.

    hr = exp(-delta * beta), so with a protective covariate (beta < 0) and
    delta > 0 the ratio is > 1: lower LVEF, higher hazard.
    """
    if not fit.converged:
        raise InvalidStateError("hazard_ratio_per requires a converged fit")
    if delta == 0:
        raise InvalidParameterError("delta must be non-zero")
    center = -delta * fit.beta
    half_width = 1.96 * abs(delta) * fit.standard_error
    return (_safe_exp(center), _safe_exp(center - half_width), _safe_exp(center + half_width))


def _safe_exp(value: float) -> float:
    # math.exp overflows loudly; an unbounded Wald endpoint is simply inf
    try:
        return math.exp(value)
    except OverflowError:
        return math.inf
