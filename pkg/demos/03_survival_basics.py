"""
Stratified survival curves and the hazard of a falling LVEF
===========================================================

A synthetic cohort provides event times with a hazard that rises as the true
LVEF falls.  Stratifying on a measured LVEF gives Kaplan-Meier curves per
function band; a proportional-hazards fit turns the continuous measurement
into a hazard ratio per 5-point decrease.
"""

import numpy as np

from lvef_fusion import (
    SimConfig,
    cox_fit_from_arrays,
    hazard_ratio_per,
    km_event_rate_at,
    km_from_arrays,
    km_survival_at,
    simulate,
    stratify,
)

# One synthetic cohort, fully determined by the seed.
cohort = simulate(SimConfig(n_patients=1366, seed=5))
records = cohort.measurements
simpson = np.array([m.simpson_lvef for m in records])
time_days = np.array([m.time_days for m in records])
event = np.array([m.event for m in records])

# Kaplan-Meier per LVEF stratum: low (< 35), mid ([35, 50]), high (> 50).
labels = stratify(simpson)
print("one-year event rate by Simpson's LVEF stratum:")
for label in ("low", "mid", "high"):
    mask = labels == label
    curve = km_from_arrays(time_days[mask], event[mask])
    rate = km_event_rate_at(curve, 365.0)
    half_year = 1.0 - km_survival_at(curve, 182.5)
    print(f"  {label:<5} n={int(mask.sum()):4d}  "
          f"6-month {half_year:.3f}  1-year {rate:.3f}")

# The proportional-hazards fit uses the measurement as a continuous covariate.
fit = cox_fit_from_arrays(time_days, event, simpson)
hr, lo, hi = hazard_ratio_per(fit, delta=5.0)
print()
print(f"cox fit: beta {fit.beta:+.5f} per LVEF point "
      f"(se {fit.standard_error:.5f}, {fit.iterations} iterations)")
print(f"hazard ratio per 5-point decrease: {hr:.3f}  (95% CI {lo:.3f}-{hi:.3f})")

# The generative slope is -0.0152 per point, i.e. a true hazard ratio of
# exp(0.076) = 1.079 per 5-point decrease; measurement noise attenuates the
# fitted value toward 1.
print(f"generative hazard ratio:           {np.exp(5 * 0.0152):.3f}")
