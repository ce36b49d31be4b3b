"""
Monte Carlo simulation of the price model and of the signature-drift SDE.

Paths are cut into fixed-size chunks. Each chunk is a self-contained,
picklable task, so chunks can run in worker processes; results are always
put back together in chunk order. The signature state of every path is
advanced by Chen's identity with the exponential of the step increment.
"""

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import TypeVar

import attrs
import numpy as np
from scipy import stats

from sigvol.algebra import TensorPoly, Word, bracket, concatenate, shuffle
from sigvol.engine import drivers
from sigvol.engine.dataclasses import (
    ExplosionStats,
    ModelParams,
    Mode,
    PriceSampleSet,
    SimConfig,
)
from sigvol.exceptions import ModelError, NumericalFailure
from sigvol.signature import (
    Levels,
    chen_product,
    dense_coefficients,
    expected_sig_time_bm,
    identity_levels,
    pair_dense,
    tensor_exp,
)

logger = logging.getLogger(__name__)

# Outer steps are split at most this many times before giving up.
MAX_SUBSTEPS = 1_000_000

R = TypeVar("R")


def _chunks(config: SimConfig) -> list[tuple[int, int]]:
    size = config.chunk_size
    return [
        (start, min(start + size, config.n_paths))
        for start in range(0, config.n_paths, size)
    ]


def _run(task: Callable[[], R]) -> R:
    return task()


def run_chunks(tasks: Sequence[Callable[[], R]], workers: int) -> list[R]:
    """Run tasks, in worker processes when asked to; keep their order."""
    if workers <= 1 or len(tasks) <= 1:
        return [task() for task in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_run, tasks))


def _batched_state(alphabet_dim: int, level: int, n_paths: int) -> Levels:
    return [
        np.broadcast_to(tensor, (n_paths, tensor.size)).copy()
        for tensor in identity_levels(alphabet_dim, level)
    ]


@attrs.frozen(eq=False)
class _PriceChunk:
    coefficients: list[np.ndarray]
    level: int
    alphabet_dim: int
    mode: Mode
    rho: float
    s0: float
    horizon: float
    n_steps: int
    seeds: np.ndarray
    signs: np.ndarray
    label: str

    def __call__(self) -> tuple[np.ndarray, np.ndarray]:
        n_paths = len(self.seeds)
        dt = self.horizon / self.n_steps
        n_rows = 2 if self.mode is Mode.ONE_FACTOR else self.alphabet_dim - 1
        noise = drivers.batch_drivers(
            self.seeds, self.signs, n_rows, self.horizon, self.n_steps
        )
        if self.mode is Mode.ONE_FACTOR:
            d_b = noise[:, 0]
            d_w = self.rho * noise[:, 0] + math.sqrt(1 - self.rho**2) * noise[:, 1]
            signature_noise = d_w[:, None, :]
        else:
            d_b = noise[:, 0]
            signature_noise = noise

        state = _batched_state(self.alphabet_dim, self.level, n_paths)
        log_return = np.zeros(n_paths)
        variance = np.zeros(n_paths)
        increment = np.empty((n_paths, self.alphabet_dim))
        increment[:, 0] = dt
        with np.errstate(over="ignore", invalid="ignore"):
            for step in range(self.n_steps):
                vol = pair_dense(self.coefficients, state)
                log_return += vol * d_b[:, step] - 0.5 * vol * vol * dt
                variance += vol * vol * dt
                if self.level:
                    increment[:, 1:] = signature_noise[:, :, step]
                    state = chen_product(
                        state, tensor_exp(increment, self.level), self.level
                    )
            prices = self.s0 * np.exp(log_return)
        logger.debug("%s: %d paths done", self.label, n_paths)
        return prices, variance


def _price_tasks(params: ModelParams, config: SimConfig) -> list[_PriceChunk]:
    n_steps = config.step_count(params.horizon)
    coefficients = dense_coefficients(params.sigma, params.order)
    tasks = []
    for number, (start, stop) in enumerate(_chunks(config)):
        seeds, signs = drivers.chunk_seeds(config.seed, start, stop, config.antithetic)
        tasks.append(
            _PriceChunk(
                coefficients=coefficients,
                level=params.order,
                alphabet_dim=params.alphabet_dim,
                mode=params.mode,
                rho=params.rho,
                s0=params.s0,
                horizon=params.horizon,
                n_steps=n_steps,
                seeds=seeds,
                signs=signs,
                label=f"chunk {number}",
            )
        )
    return tasks


def _simulate_prices(params: ModelParams, config: SimConfig) -> PriceSampleSet:
    tasks = _price_tasks(params, config)
    results = run_chunks(tasks, config.workers)
    prices = np.concatenate([prices for prices, _ in results])
    variances = np.concatenate([variance for _, variance in results])
    seeds = np.concatenate([task.seeds for task in tasks])
    valid = np.isfinite(prices) & np.isfinite(variances)
    samples = PriceSampleSet(prices, variances, seeds, valid)
    if samples.n_invalid:
        logger.warning(
            "%d of %d paths produced non-finite values and are flagged invalid",
            samples.n_invalid,
            len(samples),
        )
    return samples


def simulate_price_paths(params: ModelParams, config: SimConfig) -> PriceSampleSet:
    """Terminal prices and realized variances of the one-factor model."""
    if params.mode is not Mode.ONE_FACTOR:
        raise ModelError("simulate_price_paths needs a one-factor model")
    return _simulate_prices(params, config)


def simulate_price_paths_multid(
    params: ModelParams, config: SimConfig
) -> PriceSampleSet:
    """As ``simulate_price_paths``, for the signature of ``(t, B, Z...)``."""
    if params.mode is not Mode.MULTI_FACTOR:
        raise ModelError("simulate_price_paths_multid needs a multi-factor model")
    return _simulate_prices(params, config)


def simulate(params: ModelParams, config: SimConfig) -> PriceSampleSet:
    if params.mode is Mode.ONE_FACTOR:
        return simulate_price_paths(params, config)
    return simulate_price_paths_multid(params, config)


def expected_integrated_variance(params: ModelParams) -> float:
    """``E[int_0^T sigma_t^2 dt]`` from the expected signature."""
    sigma = params.sigma
    integrand = concatenate(
        shuffle(sigma, sigma), TensorPoly.of_word(Word((1,)), params.alphabet_dim)
    )
    expected = expected_sig_time_bm(
        params.horizon, params.alphabet_dim - 1, 2 * params.order + 1
    )
    return bracket(integrand, expected)


@attrs.frozen(eq=False)
class DriftPathSet:
    """First passage times of ``|X|`` through the cap and twice the cap."""

    exit_times: np.ndarray
    exit_times_double_cap: np.ndarray
    terminal_x: np.ndarray
    path_seeds: np.ndarray

    @property
    def exploded(self) -> np.ndarray:
        return np.isfinite(self.exit_times)

    @property
    def exploded_double_cap(self) -> np.ndarray:
        return np.isfinite(self.exit_times_double_cap)


def substep_size(
    remaining: np.ndarray,
    drift: np.ndarray,
    x: np.ndarray,
    kappa: float,
    scale_substeps: bool = False,
) -> np.ndarray:
    """
    ``min(remaining, kappa / (1 + |drift|))``; with ``scale_substeps`` the
    bound is multiplied by ``max(1, |x|)``.
    """
    limit = kappa / (1.0 + np.abs(drift))
    if scale_substeps:
        limit = limit * np.maximum(1.0, np.abs(x))
    return np.minimum(remaining, limit)


@attrs.frozen(eq=False)
class _DriftChunk:
    coefficients: list[np.ndarray]
    level: int
    alphabet_dim: int
    mode: Mode
    rho: float
    horizon: float
    n_steps: int
    x_cap: float
    kappa: float
    scale_substeps: bool
    seeds: np.ndarray
    signs: np.ndarray
    label: str

    def _drift(self, state: Levels) -> np.ndarray:
        drift = pair_dense(self.coefficients, state)
        if self.mode is Mode.ONE_FACTOR:
            return self.rho * drift
        return drift

    def __call__(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n_paths = len(self.seeds)
        dt = self.horizon / self.n_steps
        if self.mode is Mode.ONE_FACTOR:
            noise = drivers.batch_drivers(
                self.seeds, self.signs, 2, self.horizon, self.n_steps
            )
            d_w = self.rho * noise[:, 0] + math.sqrt(1 - self.rho**2) * noise[:, 1]
            noise = d_w[:, None, :]
        else:
            noise = drivers.batch_drivers(
                self.seeds,
                self.signs,
                self.alphabet_dim - 1,
                self.horizon,
                self.n_steps,
            )

        x = np.zeros(n_paths)
        state = _batched_state(self.alphabet_dim, self.level, n_paths)
        exit_times = np.full(n_paths, np.inf)
        exit_times_double = np.full(n_paths, np.inf)
        alive = np.ones(n_paths, dtype=bool)

        with np.errstate(over="ignore", invalid="ignore"):
            for step in range(self.n_steps):
                live = np.flatnonzero(alive)
                if not live.size:
                    break
                remaining = np.full(live.size, dt)
                clock = np.full(live.size, step * dt)
                substeps = 0
                while live.size:
                    sub_state = [tensor[live] for tensor in state]
                    drift = self._drift(sub_state)
                    h = substep_size(
                        remaining, drift, x[live], self.kappa, self.scale_substeps
                    )
                    # Driver increments are split linearly inside the step.
                    share = h / dt
                    d_noise = noise[live, :, step] * share[:, None]
                    d_x = drift * h + d_noise[:, 0]
                    increment = np.column_stack([h, d_x, d_noise[:, 1:]])
                    new_state = chen_product(
                        sub_state, tensor_exp(increment, self.level), self.level
                    )
                    for tensor, new in zip(state, new_state):
                        tensor[live] = new
                    x[live] += d_x
                    remaining -= h
                    clock += h

                    magnitude = np.abs(x[live])
                    blown = ~np.isfinite(magnitude)
                    crossed = (magnitude >= self.x_cap) | blown
                    first = crossed & ~np.isfinite(exit_times[live])
                    exit_times[live[first]] = clock[first]
                    retired = (magnitude >= 2 * self.x_cap) | blown
                    exit_times_double[live[retired]] = clock[retired]
                    alive[live[retired]] = False

                    keep = ~retired & (remaining > 1e-15 * dt)
                    live, remaining, clock = live[keep], remaining[keep], clock[keep]
                    substeps += 1
                    if substeps > MAX_SUBSTEPS:
                        raise NumericalFailure(
                            f"{self.label}: step {step} needed more than "
                            f"{MAX_SUBSTEPS} sub-steps"
                        )
        logger.debug(
            "%s: %d of %d paths crossed the cap",
            self.label,
            int(np.isfinite(exit_times).sum()),
            n_paths,
        )
        return exit_times, exit_times_double, x


def simulate_drift_paths(params: ModelParams, config: SimConfig) -> DriftPathSet:
    """
    Solve ``dX = <sigma, sig(t, X)> dt`` (times ``rho`` in one-factor mode)
    driven by ``W`` (resp. by ``B`` with the extra factors in the state).
    """
    n_steps = config.step_count(params.horizon)
    coefficients = dense_coefficients(params.sigma, params.order)
    tasks = []
    for number, (start, stop) in enumerate(_chunks(config)):
        seeds, signs = drivers.chunk_seeds(config.seed, start, stop, config.antithetic)
        tasks.append(
            _DriftChunk(
                coefficients=coefficients,
                level=params.order,
                alphabet_dim=params.alphabet_dim,
                mode=params.mode,
                rho=params.rho,
                horizon=params.horizon,
                n_steps=n_steps,
                x_cap=config.x_cap,
                kappa=config.kappa,
                scale_substeps=config.scale_substeps,
                seeds=seeds,
                signs=signs,
                label=f"chunk {number}",
            )
        )
    results = run_chunks(tasks, config.workers)
    return DriftPathSet(
        exit_times=np.concatenate([r[0] for r in results]),
        exit_times_double_cap=np.concatenate([r[1] for r in results]),
        terminal_x=np.concatenate([r[2] for r in results]),
        path_seeds=np.concatenate([task.seeds for task in tasks]),
    )


def explosion_stats(
    paths: DriftPathSet,
    config: SimConfig,
    horizon: float,
    confidence: float = 0.95,
) -> ExplosionStats:
    n_paths = len(paths.exit_times)
    n_exploded = int(paths.exploded.sum())
    n_double = int(paths.exploded_double_cap.sum())
    interval = stats.binomtest(n_exploded, n_paths).proportion_ci(
        confidence_level=confidence, method="exact"
    )
    exits = paths.exit_times[paths.exploded]
    return ExplosionStats(
        n_exploded=n_exploded,
        n_paths=n_paths,
        p_hat=n_exploded / n_paths,
        ci95=(float(interval.low), float(interval.high)),
        cap_used=config.x_cap,
        mean_exit_time=float(exits.mean()) if exits.size else None,
        n_exploded_double_cap=n_double,
        p_hat_double_cap=n_double / n_paths,
        step_size=horizon / config.step_count(horizon),
        seed=config.seed,
    )


def simulate_drift_sde(
    params: ModelParams, config: SimConfig, confidence: float = 0.95
) -> ExplosionStats:
    paths = simulate_drift_paths(params, config)
    return explosion_stats(paths, config, params.horizon, confidence)
