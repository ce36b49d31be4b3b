"""
Experiment runners.

A runner turns a validated experiment into result files (as bytes, so the
caller decides where they go) and a one-line summary.
"""

import logging
import math
from collections.abc import Callable
from typing import Any

import numpy as np

from sigvol import diagnostics, pricing
from sigvol.engine import simulation
from sigvol.engine.dataclasses import ModelParams, PriceSampleSet
from sigvol.exceptions import NumericalFailure
from sigvol.experiments.dataclasses import (
    CriticalExperiment,
    Experiment,
    ExplodeExperiment,
    MomentsExperiment,
    RunResult,
    SimulateExperiment,
    SmileExperiment,
    WingsExperiment,
)
from sigvol.experiments.storages import encode_csv, encode_json

logger = logging.getLogger(__name__)


def _require_finite(**values: float | None) -> None:
    for name, value in values.items():
        if value is not None and not math.isfinite(value):
            raise NumericalFailure(f"{name} is not finite ({value})")


def _simulate(model: ModelParams, experiment: Any) -> PriceSampleSet:
    samples = simulation.simulate(model, experiment.sim)
    if not samples.valid.any():
        raise NumericalFailure("every simulated path is invalid")
    return samples


def _sample_summary(
    model: ModelParams, samples: PriceSampleSet, confidence: float
) -> dict[str, Any]:
    gap, gap_ci = diagnostics.martingale_gap(samples, model.s0, confidence)
    variances = samples.valid_variances()
    n = len(variances)
    variance_mean = float(variances.mean())
    variance_stderr = float(variances.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    _require_finite(martingale_gap=gap, realized_variance=variance_mean)
    return {
        "n_paths": len(samples),
        "n_invalid": samples.n_invalid,
        "mean_terminal_price": model.s0 - gap,
        "martingale_gap": gap,
        "gap_ci": list(gap_ci),
        "realized_variance_mean": variance_mean,
        "realized_variance_stderr": variance_stderr,
        "expected_integrated_variance": simulation.expected_integrated_variance(model),
    }


def _echo(experiment: Any) -> dict[str, Any]:
    sim = experiment.sim
    horizon = experiment.model.horizon
    return {
        "model": experiment.model.to_json(),
        "sim": {
            "n_paths": sim.n_paths,
            "n_steps": sim.n_steps,
            "seed": sim.seed,
            "x_cap": sim.x_cap,
            "antithetic": sim.antithetic,
            "kappa": sim.kappa,
            "chunk_size": sim.chunk_size,
            "scale_substeps": sim.scale_substeps,
            "step_size": horizon / sim.step_count(horizon),
        },
    }


def run_simulate(experiment: SimulateExperiment) -> RunResult:
    samples = _simulate(experiment.model, experiment)
    summary = _sample_summary(experiment.model, samples, experiment.confidence)
    files = {"simulate.json": encode_json({**_echo(experiment), "result": summary})}
    if experiment.dump_samples:
        pairs = zip(samples.terminal_prices, samples.valid)
        files["samples.csv"] = encode_csv(
            ["terminal_price"], ([repr(float(p))] if ok else [""] for p, ok in pairs)
        )
    return RunResult(
        files,
        f"gap {summary['martingale_gap']:.6g} "
        f"[{summary['gap_ci'][0]:.6g}, {summary['gap_ci'][1]:.6g}] "
        f"over {summary['n_paths']} paths",
    )


def _smile_rows(
    experiment: SmileExperiment | WingsExperiment, samples: PriceSampleSet
) -> list[pricing.SmileRow]:
    model = experiment.model
    return pricing.smile_from_samples(
        samples, model.s0, model.horizon, experiment.strikes, experiment.confidence
    )


def _smile_csv(rows: list[pricing.SmileRow]) -> bytes:
    return encode_csv(pricing.SMILE_COLUMNS, (row.to_csv_row() for row in rows))


def run_smile(experiment: SmileExperiment) -> RunResult:
    samples = _simulate(experiment.model, experiment)
    rows = _smile_rows(experiment, samples)
    verdict = diagnostics.classify_martingality(
        experiment.model, samples, experiment.confidence
    )
    _require_finite(martingale_gap=verdict.measured_gap)
    overlaps = [row.cis_overlap() for row in rows]
    compared = [overlap for overlap in overlaps if overlap is not None]
    result = {
        **_echo(experiment),
        "verdict": verdict.to_json(),
        "summary": _sample_summary(experiment.model, samples, experiment.confidence),
        "strikes_compared": len(compared),
        "cis_overlap_everywhere": all(compared) if compared else None,
        "overlap_by_strike": overlaps,
    }
    return RunResult(
        {"smile.csv": _smile_csv(rows), "smile.json": encode_json(result)},
        f"predicted martingale: {verdict.predicted_martingale} "
        f"({verdict.reason.value}), consistent: {verdict.consistent}",
    )


def run_explode(experiment: ExplodeExperiment) -> RunResult:
    stats = simulation.simulate_drift_sde(
        experiment.model, experiment.sim, experiment.confidence
    )
    _require_finite(p_hat=stats.p_hat)
    result = {**_echo(experiment), "explosion": stats.to_json()}
    return RunResult(
        {"explosion.json": encode_json(result)},
        f"p_hat {stats.p_hat:.6g} [{stats.ci95[0]:.6g}, {stats.ci95[1]:.6g}], "
        f"{stats.n_exploded}/{stats.n_paths} paths crossed {stats.cap_used:g}",
    )


def run_moments(experiment: MomentsExperiment) -> RunResult:
    samples = _simulate(experiment.model, experiment)
    verdict = diagnostics.moment_verdict(experiment.model, experiment.m, samples)
    _require_finite(tail_share=verdict.tail_share)
    result = {**_echo(experiment), "moments": verdict.to_json()}
    return RunResult(
        {"moments.json": encode_json(result)},
        f"m = {verdict.m:g}: {verdict.regime.value} "
        f"(threshold {verdict.threshold:.6g}), tail share {verdict.tail_share:.3g}",
    )


def run_critical(experiment: CriticalExperiment) -> RunResult:
    report = diagnostics.critical_case_report(
        experiment.alpha,
        experiment.beta,
        experiment.m,
        experiment.T,
        experiment.lambda_grid,
        mc=experiment.sim,
        psi=experiment.psi,
        rho=experiment.rho,
        confidence=experiment.confidence,
    )
    if not np.all(np.isfinite(report.values)):
        raise NumericalFailure("the control functional is not finite on the grid")
    return RunResult(
        {"critical.json": encode_json(report.to_json())},
        f"{report.verdict.value}: lambda^2 coefficient "
        f"{report.quadratic_coefficient:.6g}, T* = {report.t_star:.6g}",
    )


def run_wings(experiment: WingsExperiment) -> RunResult:
    samples = _simulate(experiment.model, experiment)
    rows = _smile_rows(experiment, samples)
    report = pricing.wing_slope(
        rows, experiment.model.horizon, experiment.fit_range, experiment.model.rho
    )
    _require_finite(slope_hat=report.slope_hat)
    result = {**_echo(experiment), "wings": report.to_json()}
    return RunResult(
        {"smile.csv": _smile_csv(rows), "wings.json": encode_json(result)},
        f"slope {report.slope_hat:.6g} ± {report.stderr:.2g} "
        f"against beta_R {report.beta_r:.6g}",
    )


RUNNERS: dict[str, Callable[[Any], RunResult]] = {
    "simulate": run_simulate,
    "smile": run_smile,
    "explode": run_explode,
    "moments": run_moments,
    "critical": run_critical,
    "wings": run_wings,
}


def run_experiment(command: str, experiment: Experiment) -> RunResult:
    logger.info("running %s", command)
    return RUNNERS[command](experiment)
