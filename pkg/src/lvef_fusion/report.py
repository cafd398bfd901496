"""Analysis report assembly and artifact serialization.

The report JSON is deterministic for a fixed cohort, configuration, and seed:
keys are sorted, floats are emitted at full double precision, and the only
run-dependent field is metadata.generated_at.  CSV artifacts round to 4
decimal places; JSON keeps full precision.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone

from .calibration import (
    SIMPSON_STREAM_INDEX,
    SUMMARY_LEVELS,
    VISUAL_STREAM_INDEX,
    CalibrationConfig,
    chain_diagnostics,
    paired_calibration,
)
from .cohort import _open_destination
from .errors import InvalidParameterError, InvalidStateError, LvefFusionWarning
from .fusion import InstrumentSigma, precision_ratio, relative_reduction, total_variation
from .propagation import (
    HR_DELTA,
    SOURCES,
    PropagationConfig,
    PropagationSummary,
    fused_estimates,
    propagate,
)
from .stochastics import SampleSummary, make_stream, summarize
from .survival import CoxFit, hazard_ratio_per

__all__ = [
    "ReportOptions",
    "run_report",
    "render_report_json",
    "write_report_json",
    "write_km_band_csv",
    "summary_to_dict",
    "posterior_to_dict",
    "propagation_to_dict",
    "cox_fit_to_dict",
    "config_hash",
    "TOOL_NAME",
    "TOOL_VERSION",
]

TOOL_NAME = "lvef-fusion"
TOOL_VERSION = "0.1.0"

# Slack for re-checking band nesting at write time; replicate means can sit
# a few ulps outside the percentile envelope when all replicates agree.
_NESTING_SLACK = 1e-9


@dataclass(frozen=True)
class ReportOptions:
    """Everything the full pipeline needs beyond the cohort itself."""

    sigmas: InstrumentSigma
    seed: int = 0
    replicates: int = 1000
    horizon: float = 365.0
    band_edges: tuple = (35.0, 50.0)
    sources: tuple = SOURCES
    clamp_range: tuple = (1.0, 99.0)
    calibration: CalibrationConfig | None = None

    def __post_init__(self):
        unknown = [s for s in self.sources if s not in SOURCES]
        if unknown:
            raise InvalidParameterError(f"unknown sources {unknown}; expected subset of {SOURCES}")
        if not self.sources:
            raise InvalidParameterError("at least one source is required")


def summary_to_dict(summary: SampleSummary) -> dict:
    return {
        "mean": float(summary.mean),
        "sd": float(summary.sd),
        "n": int(summary.n),
        "quantiles": {str(level): float(v) for level, v in summary.quantiles.items()},
    }


def posterior_to_dict(posterior, diagnostics=None) -> dict:
    """Parameter and predictive summaries plus sampler health figures."""
    out = {
        "acceptance_rate": float(posterior.acceptance_rate),
        "parameter": summary_to_dict(summarize(posterior.parameter_chain, SUMMARY_LEVELS)),
        "predictive": summary_to_dict(posterior.summary),
    }
    if diagnostics is None:
        diagnostics = chain_diagnostics(posterior)
    out["diagnostics"] = {
        "lag1_autocorrelation": float(diagnostics.lag1_autocorrelation),
        "effective_sample_size": float(diagnostics.effective_sample_size),
    }
    return out


def _stratum_to_dict(stratum) -> dict:
    if stratum.n_present == 0:
        return {"present": False, "n_present": 0}
    return {
        "present": True,
        "n_present": int(stratum.n_present),
        "mean_event_rate": float(stratum.mean_event_rate),
        "quantiles": {str(level): float(v) for level, v in stratum.quantiles.items()},
    }


def propagation_to_dict(summary: PropagationSummary) -> dict:
    out = {
        "source": summary.source,
        "replicates": int(summary.replicates),
        "failed_replicates": int(summary.failed_replicates),
        "horizon_days": float(summary.horizon),
        "hazard_ratio": {
            "per_lvef_decrease": HR_DELTA,
            "mean": float(summary.hazard_ratio_mean),
            "q0.025": float(summary.hazard_ratio_q025),
            "q0.975": float(summary.hazard_ratio_q975),
            "band_width": float(summary.hazard_ratio_q975 - summary.hazard_ratio_q025),
        },
        "event_rates": {label: _stratum_to_dict(s) for label, s in summary.event_rates.items()},
        "km_band_points": {
            label: (0 if band is None else int(band.times.size))
            for label, band in summary.km_bands.items()
        },
    }
    return out


def cox_fit_to_dict(fit: CoxFit, delta: float = HR_DELTA) -> dict:
    """Serializable fit summary; non-finite interval endpoints become null."""
    out = {
        "beta": float(fit.beta),
        "standard_error": _finite_or_none(fit.standard_error),
        "iterations": int(fit.iterations),
        "converged": bool(fit.converged),
        "log_partial_likelihood": float(fit.log_partial_likelihood),
    }
    if fit.converged:
        estimate, lower, upper = hazard_ratio_per(fit, delta)
        out["hazard_ratio"] = {
            "per_lvef_decrease": float(delta),
            "estimate": _finite_or_none(estimate),
            "wald_lower": _finite_or_none(lower),
            "wald_upper": _finite_or_none(upper),
        }
    return out


def _finite_or_none(value: float):
    value = float(value)
    return value if math.isfinite(value) else None


def config_hash(config: dict) -> str:
    """Stable sha256 over the canonical JSON encoding of the configuration."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _config_echo(options: ReportOptions, calibration: CalibrationConfig | None) -> dict:
    echo = {
        "mode": options.sigmas.mode,
        "sigma_visual": float(options.sigmas.visual_sigma),
        "sigma_simpson": float(options.sigmas.simpson_sigma),
        "seed": int(options.seed),
        "replicates": int(options.replicates),
        "horizon_days": float(options.horizon),
        "band_edges": [float(v) for v in options.band_edges],
        "sources": list(options.sources),
        "clamp_range": [float(v) for v in options.clamp_range],
    }
    if calibration is not None:
        echo["calibration"] = {
            "likelihood_shape": calibration.likelihood_shape,
            "prior_shape": calibration.prior_shape,
            "prior_rate": calibration.prior_rate,
            "chain_length": calibration.chain_length,
            "burn_in": calibration.burn_in,
            "kept_samples": calibration.kept_samples,
            "observation_weight": calibration.observation_weight,
            "tune_proposal": calibration.tune_proposal,
            "visual_stream_index": VISUAL_STREAM_INDEX,
            "simpson_stream_index": SIMPSON_STREAM_INDEX,
        }
    return echo


def run_report(cohort, options: ReportOptions, parse_warnings=()) -> tuple[dict, dict]:
    """Run fusion, calibration, and propagation; assemble the report.

    Returns (report dict, {source: PropagationSummary}).  The propagation
    summaries carry the KM bands, which go to CSV rather than the JSON.
    Warnings raised by the pipeline are recorded in the report and re-emitted.
    """
    cohort = list(cohort)
    sigmas = options.sigmas
    report_warnings = [{"category": "ParseWarning", "message": str(m)} for m in parse_warnings]

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", LvefFusionWarning)

        fused = fused_estimates(cohort, sigmas)
        fusion_section = {
            "mode": sigmas.mode,
            "sigma_visual": float(sigmas.visual_sigma),
            "sigma_simpson": float(sigmas.simpson_sigma),
        }
        if sigmas.visual_sigma > 0 and sigmas.simpson_sigma > 0:
            fusion_section.update(
                omega=precision_ratio(sigmas),
                total_variation=total_variation(sigmas),
                relative_reduction=relative_reduction(sigmas),
            )
        if fused:
            fusion_section["theta_sigma"] = float(fused[0].theta_sigma)
            fusion_section["cohort_theta"] = summary_to_dict(
                summarize([f.theta for f in fused], SUMMARY_LEVELS)
            )
        fusion_section["n_patients"] = len(cohort)

        cal_config = options.calibration
        calibration_section: dict = {}
        if sigmas.visual_sigma > 0 and sigmas.simpson_sigma > 0:
            if cal_config is None:
                cal_config = CalibrationConfig(observed_sigma=sigmas.visual_sigma)
            visual, simpson, reduction = paired_calibration(
                sigmas.visual_sigma,
                sigmas.simpson_sigma,
                make_stream(options.seed, VISUAL_STREAM_INDEX),
                make_stream(options.seed, SIMPSON_STREAM_INDEX),
                mode=sigmas.mode,
                likelihood_shape=cal_config.likelihood_shape,
                prior_shape=cal_config.prior_shape,
                prior_rate=cal_config.prior_rate,
                chain_length=cal_config.chain_length,
                kept_samples=cal_config.kept_samples,
                proposal_sd=cal_config.proposal_sd,
                burn_in=cal_config.burn_in,
                observation_weight=cal_config.observation_weight,
                tune_proposal=cal_config.tune_proposal,
            )
            calibration_section = {
                "visual": posterior_to_dict(visual),
                "simpson": posterior_to_dict(simpson),
                "relative_reduction": summary_to_dict(reduction.summary),
            }
        else:
            calibration_section = {
                "skipped": True,
                "reason": "error calibration requires strictly positive sigmas",
            }

        propagation_section: dict = {}
        summaries: dict = {}
        for source in options.sources:
            config = PropagationConfig(
                source=source,
                sigmas=sigmas,
                seed=options.seed,
                replicates=options.replicates,
                horizon=options.horizon,
                band_edges=tuple(options.band_edges),
                clamp_range=tuple(options.clamp_range),
            )
            summary = propagate(cohort, fused, config)
            summaries[source] = summary
            propagation_section[source] = propagation_to_dict(summary)
            if summary.failed_replicates:
                report_warnings.append({
                    "category": "ReplicateExclusion",
                    "message": (
                        f"source {source}: {summary.failed_replicates} of "
                        f"{summary.replicates} replicates excluded from "
                        "hazard-ratio aggregation"
                    ),
                })

    for w in caught:
        report_warnings.append({"category": w.category.__name__, "message": str(w.message)})
        warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)

    config_echo = _config_echo(options, cal_config)
    report = {
        "metadata": {
            "tool": TOOL_NAME,
            "version": TOOL_VERSION,
            "generated_at": _utc_now_iso(),
            "seed": int(options.seed),
            "config_hash": config_hash(config_echo),
        },
        "config": config_echo,
        "units": {
            "lvef": "percent",
            "time": "days",
            "event_rate": "cumulative event probability by the horizon",
            "hazard_ratio": f"per {HR_DELTA:g}-point LVEF decrease",
        },
        "fusion": fusion_section,
        "error_calibration": calibration_section,
        "propagation": propagation_section,
        "warnings": report_warnings,
    }
    return report, summaries


def render_report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_report_json(report: dict, destination) -> None:
    handle, close_after = _open_destination(destination)
    try:
        handle.write(render_report_json(report))
    finally:
        if close_after:
            handle.close()


def _fmt(value: float) -> str:
    return f"{value:.4f}"


def _checked_row(source, label, t, lo, me, up):
    # Nesting is re-checked at write time; float noise inside the slack is
    # clamped so every emitted row satisfies lower <= mean <= upper exactly.
    slack = _NESTING_SLACK * (1.0 + abs(me))
    if me < lo - slack or me > up + slack or up < lo - slack:
        raise InvalidStateError(
            f"band nesting violated for {source}/{label} at t={t}: "
            f"lower={lo!r} mean={me!r} upper={up!r}"
        )
    me = min(max(me, lo), up)
    return [source, label, _fmt(t), _fmt(lo), _fmt(me), _fmt(up)]


def write_km_band_csv(summaries, destination) -> None:
    """Long-format band CSV: source, stratum, time_days, lower, mean, upper.

    Accepts one PropagationSummary or a sequence; absent strata emit no rows.
    Step-function points appear at every band time.
    """
    if isinstance(summaries, PropagationSummary):
        summaries = [summaries]
    summaries = list(summaries)

    try:
        handle, close_after = _open_destination(destination)
    except OSError as exc:
        raise OSError(f"cannot write KM band CSV to {destination}: {exc}") from exc
    try:
        writer = csv.writer(handle)
        writer.writerow(["source", "stratum", "time_days", "lower", "mean", "upper"])
        for summary in summaries:
            for label, band in summary.km_bands.items():
                if band is None:
                    continue
                for t, lo, me, up in zip(band.times, band.lower, band.mean, band.upper):
                    writer.writerow(_checked_row(summary.source, label, t, lo, me, up))
    except OSError as exc:
        raise OSError(f"cannot write KM band CSV to {destination}: {exc}") from exc
    finally:
        if close_after:
            handle.close()
