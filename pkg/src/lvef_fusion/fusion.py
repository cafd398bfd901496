"""Closed-form Bayesian fusion of paired LVEF measurements.

A visual estimate V and a Simpson's-biplane estimate S of the same ejection
fraction are combined by precision weighting.  Two interpretations of the
instrument spreads are supported:

* ``paper-sd`` (default): the published standard deviations enter the weights
  directly, i.e. theta = (sV*S + sS*V)/(sV + sS) and the posterior spread is
  the harmonic combination 1/(1/sV + 1/sS).  This mode reproduces the source
  study's reported ~-33% spread reduction.
* ``variance``: textbook conjugate-normal updating with the same formulas
  applied to sV^2 and sS^2; the reported spread is the square root of the
  resulting posterior variance.

The precision ratio omega = (1/sS)/(1/sV), total variation T = sV + sS, the
MAP identity theta = (omega*S + V)/(omega + 1) and the relative spread
reduction R = -1/(omega + 1) are all expressed in the active mode's units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyInputError, InvalidParameterError

__all__ = [
    "MODES",
    "InstrumentSigma",
    "FusedEstimate",
    "fuse",
    "fuse_cohort",
    "precision_ratio",
    "total_variation",
    "theta_map",
    "relative_reduction",
]

MODES = ("paper-sd", "variance")


@dataclass(frozen=True)
class InstrumentSigma:
    """Cohort-level spread of each instrument, in LVEF percentage points.

    Zero sigmas are representable (degenerate, noise-free instruments appear
    in simulation studies) but the fusion formulas below require both to be
    strictly positive and will reject zeros.
    """

    visual_sigma: float
    simpson_sigma: float
    mode: str = "paper-sd"

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("visual_sigma", "simpson_sigma"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise InvalidParameterError(f"{name} must be finite and >= 0, got {value!r}")

    def weights(self) -> tuple[float, float]:
        """(visual weight, simpson weight) in the active mode's spread units."""
        _require_positive(self)
        if self.mode == "variance":
            return self.visual_sigma**2, self.simpson_sigma**2
        return self.visual_sigma, self.simpson_sigma


def _require_positive(sigmas: InstrumentSigma):
    if sigmas.visual_sigma == 0 or sigmas.simpson_sigma == 0:
        raise InvalidParameterError("fusion requires strictly positive sigmas")


@dataclass(frozen=True)
class FusedEstimate:
    """Posterior LVEF after combining one visual / Simpson's pair."""

    theta: float
    theta_sigma: float
    omega: float
    total_variation: float
    relative_reduction: float


def _check_lvef(name: str, value: float):
    if not (np.isfinite(value) and 0.0 <= value <= 100.0):
        raise DomainError(f"{name} must be an LVEF in [0, 100], got {value!r}")


def precision_ratio(sigmas: InstrumentSigma) -> float:
    """omega: Simpson's precision divided by visual precision (> 1 when the
    Simpson's instrument is the sharper one)."""
    a, b = sigmas.weights()
    return a / b


def total_variation(sigmas: InstrumentSigma) -> float:
    """T: sum of the two spreads in the active mode's units."""
    a, b = sigmas.weights()
    return a + b


def relative_reduction(sigmas: InstrumentSigma) -> float:
    """R = (posterior spread - Simpson's spread) / Simpson's spread = -1/(omega+1).

    Always in (-1, 0): fusing can only shrink the spread, never below zero.
    """
    return -1.0 / (precision_ratio(sigmas) + 1.0)


def theta_map(visual: float, simpson: float, sigmas: InstrumentSigma) -> float:
    """Posterior mode via the precision-ratio form (omega*S + V)/(omega + 1).

    Algebraically identical to fuse(...).theta; kept separate because the two
    routes are checked against each other.
    """
    _check_lvef("visual", visual)
    _check_lvef("simpson", simpson)
    omega = precision_ratio(sigmas)
    return (omega * simpson + visual) / (omega + 1.0)


def fuse(visual: float, simpson: float, sigmas: InstrumentSigma) -> FusedEstimate:
    """Combine one measurement pair into a FusedEstimate.

    The posterior mean weights each measurement by the *other* instrument's
    spread: theta = (wV*S + wS*V)/(wV + wS) with (wV, wS) in the active mode's
    units.  The posterior spread is the harmonic combination of the two
    spreads (square-rooted back to percentage points in variance mode).
    """
    _check_lvef("visual", visual)
    _check_lvef("simpson", simpson)
    a, b = sigmas.weights()
    theta = (a * simpson + b * visual) / (a + b)
    posterior = 1.0 / (1.0 / a + 1.0 / b)
    theta_sigma = np.sqrt(posterior) if sigmas.mode == "variance" else posterior
    omega = a / b
    return FusedEstimate(
        theta=float(theta),
        theta_sigma=float(theta_sigma),
        omega=float(omega),
        total_variation=float(a + b),
        relative_reduction=float(-1.0 / (omega + 1.0)),
    )


def fuse_cohort(cohort, sigmas: InstrumentSigma) -> list[FusedEstimate]:
    """fuse applied record-wise; order preserved.  The first invalid record
    aborts the whole call with its index in the message."""
    records = list(cohort)
    if not records:
        raise EmptyInputError("fuse_cohort requires a non-empty cohort")
    fused = []
    for i, record in enumerate(records):
        try:
            fused.append(fuse(record.visual_lvef, record.simpson_lvef, sigmas))
        except (DomainError, InvalidParameterError) as exc:
            raise type(exc)(f"record {i}: {exc}") from exc
    return fused
