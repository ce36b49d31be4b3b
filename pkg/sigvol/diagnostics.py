"""
Martingality, moment and critical-case diagnostics.

Predicates encode the model's classification results; the estimators give
their Monte Carlo counterparts so the two can be compared.
"""

import enum
import logging
import math
from collections.abc import Callable, Sequence
from typing import Any

import attrs
import numpy as np
from scipy import integrate, special

from sigvol.algebra import bracket, right_deconcat_by_letter
from sigvol.engine import drivers
from sigvol.engine.dataclasses import ModelParams, Mode, PriceSampleSet, SimConfig
from sigvol.engine.simulation import run_chunks
from sigvol.exceptions import FitError, HypothesisViolated, ModelError, SigvolError
from sigvol.signature import TruncSig

logger = logging.getLogger(__name__)

CRITICAL_TOLERANCE = 1e-12


def _z(confidence: float) -> float:
    return float(special.ndtri(0.5 + confidence / 2))


class MartingaleReason(enum.Enum):
    RHO_ZERO = "rho_zero"
    ORDER_ONE = "order_one"
    ODD_AND_NONPOSITIVE = "odd_and_nonpositive"
    EVEN_ORDER = "even_order"
    POSITIVE_PRODUCT = "positive_product"


@attrs.frozen
class MartingaleVerdict:
    predicted_martingale: bool
    reason: MartingaleReason
    measured_gap: float | None = None
    gap_ci: tuple[float, float] | None = None
    consistent: bool | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "predicted_martingale": self.predicted_martingale,
            "reason": self.reason.value,
            "measured_gap": self.measured_gap,
            "gap_ci": list(self.gap_ci) if self.gap_ci else None,
            "consistent": self.consistent,
        }


def martingality_predicate(params: ModelParams) -> MartingaleVerdict:
    lead = params.leading_coefficient
    if lead == 0:
        raise HypothesisViolated(
            "theorem hypothesis violated: the leading coefficient is zero"
        )
    N = params.order
    if params.mode is Mode.ONE_FACTOR and params.rho == 0:
        return MartingaleVerdict(True, MartingaleReason.RHO_ZERO)
    if N <= 1:
        return MartingaleVerdict(True, MartingaleReason.ORDER_ONE)
    if N % 2 == 0:
        return MartingaleVerdict(False, MartingaleReason.EVEN_ORDER)
    product = lead * params.rho if params.mode is Mode.ONE_FACTOR else lead
    if product <= 0:
        return MartingaleVerdict(True, MartingaleReason.ODD_AND_NONPOSITIVE)
    return MartingaleVerdict(False, MartingaleReason.POSITIVE_PRODUCT)


def _mean_ci(
    values: np.ndarray, confidence: float
) -> tuple[float, float, tuple[float, float]]:
    n = len(values)
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    half = _z(confidence) * stderr
    return mean, stderr, (mean - half, mean + half)


def martingale_gap(
    samples: PriceSampleSet, s0: float, confidence: float = 0.95
) -> tuple[float, tuple[float, float]]:
    """``s0 - E[S_T]`` with a normal confidence interval."""
    prices = samples.valid_prices()
    if not len(prices):
        raise SigvolError("no valid samples")
    gap, _, (lo, hi) = _mean_ci(s0 - prices, confidence)
    return gap, (lo, hi)


def verdict_from_gap(
    prediction: MartingaleVerdict, gap: float, gap_ci: tuple[float, float]
) -> MartingaleVerdict:
    contains_zero = gap_ci[0] <= 0 <= gap_ci[1]
    return attrs.evolve(
        prediction,
        measured_gap=gap,
        gap_ci=gap_ci,
        consistent=prediction.predicted_martingale == contains_zero,
    )


def classify_martingality(
    params: ModelParams, samples: PriceSampleSet, confidence: float = 0.95
) -> MartingaleVerdict:
    gap, gap_ci = martingale_gap(samples, params.s0, confidence)
    return verdict_from_gap(martingality_predicate(params), gap, gap_ci)


class MomentRegime(enum.Enum):
    FINITE = "finite"
    INFINITE = "infinite"
    CRITICAL = "critical"


@attrs.frozen
class MomentVerdict:
    m: float
    rho: float
    threshold: float
    regime: MomentRegime
    estimate: float | None = None
    tail_share: float | None = None
    stderr: float | None = None
    note: str | None = None

    def to_json(self) -> dict[str, Any]:
        data = attrs.asdict(self)
        data["regime"] = self.regime.value
        return data


def moment_predicate(rho: float, m: float) -> MomentVerdict:
    """Classify ``E[S_T^m]`` by comparing ``|rho|`` with ``sqrt(1 - 1/m)``."""
    if not m > 0:
        raise ModelError(f"moment order must be positive, got {m}")
    if not abs(rho) <= 1:
        raise ModelError(f"rho must lie in [-1, 1], got {rho}")
    if m <= 1:
        return MomentVerdict(
            m,
            rho,
            0.0,
            MomentRegime.FINITE,
            note="moments of order at most 1 of a positive supermartingale are finite",
        )
    squared = 1 - 1 / m
    threshold = math.sqrt(squared)
    if abs(rho * rho - squared) <= CRITICAL_TOLERANCE:
        regime = MomentRegime.CRITICAL
    elif abs(rho) > threshold:
        regime = MomentRegime.FINITE
    else:
        regime = MomentRegime.INFINITE
    return MomentVerdict(m, rho, threshold, regime)


@attrs.frozen
class MomentEstimate:
    estimate: float
    tail_share: float
    stderr: float
    n: int


def moment_estimate(samples: PriceSampleSet, m: float) -> MomentEstimate:
    """
    Sample mean of ``S_T^m`` and the share of it owed to the largest sample.
    """
    if not m > 0:
        raise ModelError(f"moment order must be positive, got {m}")
    prices = samples.valid_prices()
    n = len(prices)
    if not n:
        raise SigvolError("no valid samples")
    with np.errstate(divide="ignore"):
        logs = m * np.log(prices)
    total = float(special.logsumexp(logs))
    if not math.isfinite(total):
        return MomentEstimate(0.0, 0.0, 0.0, n)
    top = float(logs.max())
    scaled = np.exp(logs - top)
    with np.errstate(over="ignore"):
        powers = prices**m
        fits = bool(np.isfinite(powers.sum()))
        peak = float(np.exp(top))
        if prices.min() == prices.max():
            estimate = float(prices[0]) ** m
        elif fits:
            estimate = float(powers.mean())
        else:
            # Overflowing powers; the log-space mean is inf past the float range.
            estimate = float(np.exp(total - math.log(n)))
    stderr = peak * float(scaled.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    return MomentEstimate(estimate, math.exp(top - total), stderr, n)


def moment_verdict(
    params: ModelParams, m: float, samples: PriceSampleSet
) -> MomentVerdict:
    """Moment classification of a model, with its empirical estimate."""
    if params.mode is not Mode.ONE_FACTOR:
        raise HypothesisViolated("moment classification needs a one-factor model")
    N = params.order
    if N < 2 or N % 2 == 0:
        raise HypothesisViolated(
            f"theorem hypothesis violated: order must be odd and at least 2, got {N}"
        )
    if not params.rho * params.leading_coefficient < 0:
        raise HypothesisViolated(
            "theorem hypothesis violated: rho times the leading coefficient "
            "must be negative"
        )
    estimate = moment_estimate(samples, m)
    return attrs.evolve(
        moment_predicate(params.rho, m),
        estimate=estimate.estimate,
        tail_share=estimate.tail_share,
        stderr=estimate.stderr,
    )


def spot_vol_correlation_sign(params: ModelParams, sig_state: TruncSig) -> int:
    """Sign of the instantaneous spot-volatility correlation."""
    if params.mode is not Mode.ONE_FACTOR:
        raise ModelError("spot-vol correlation is defined for the one-factor model")
    sensitivity = bracket(right_deconcat_by_letter(params.sigma, 2), sig_state)
    return int(np.sign(params.rho * sensitivity))


Shape = Callable[[np.ndarray, float], np.ndarray]


def _sine(t: np.ndarray, T: float) -> np.ndarray:
    return np.sin(np.pi * t / T)


def _sine_slope(t: np.ndarray, T: float) -> np.ndarray:
    return np.pi / T * np.cos(np.pi * t / T)


def _sine_integrals(T: float) -> dict[str, float]:
    return {
        "dpsi_sq": math.pi**2 / (2 * T),
        "psi_sq": T / 2,
        "psi_cube": 4 * T / (3 * math.pi),
        "t_psi": T**2 / math.pi,
    }


def _bump(t: np.ndarray, T: float) -> np.ndarray:
    return 4 * t * (T - t) / T**2


def _bump_slope(t: np.ndarray, T: float) -> np.ndarray:
    return 4 * (T - 2 * t) / T**2


@attrs.frozen
class Control:
    """A deterministic control shape ``psi`` on ``[0, T]`` vanishing at both ends."""

    name: str
    psi: Shape
    dpsi: Shape
    closed_form: Callable[[float], dict[str, float]] | None = None

    def integrals(self, T: float) -> dict[str, float]:
        if self.closed_form is not None:
            return self.closed_form(T)

        def quad(f: Callable[[float], float]) -> float:
            return float(integrate.quad(f, 0.0, T, limit=200)[0])

        def psi(t: float) -> float:
            return float(self.psi(np.asarray(t), T))

        return {
            "dpsi_sq": quad(lambda t: float(self.dpsi(np.asarray(t), T)) ** 2),
            "psi_sq": quad(lambda t: psi(t) ** 2),
            "psi_cube": quad(lambda t: psi(t) ** 3),
            "t_psi": quad(lambda t: t * psi(t)),
        }


SINE = Control("sine", _sine, _sine_slope, _sine_integrals)
BUMP = Control("bump", _bump, _bump_slope)
CONTROLS = {control.name: control for control in (SINE, BUMP)}


def get_control(name: str) -> Control:
    try:
        return CONTROLS[name]
    except KeyError:
        raise ModelError(f"unknown control {name!r}, pick one of {sorted(CONTROLS)}")


def _check_critical_inputs(
    alpha: float, m: float, T: float, rho: float | None
) -> float:
    if not m > 1:
        raise ModelError(f"the critical case needs m > 1, got {m}")
    if not alpha > 0:
        raise ModelError(f"alpha must be positive, got {alpha}")
    if not T > 0:
        raise ModelError(f"T must be positive, got {T}")
    if rho is not None and moment_predicate(rho, m).regime is not MomentRegime.CRITICAL:
        raise HypothesisViolated(
            f"rho = {rho} is not critical for m = {m}; use moment_predicate"
        )
    return math.sqrt(m * m - m)


@attrs.frozen(eq=False)
class CubicCoefficients:
    """``J(lambda) = sum(c[j] lambda^j)`` with per-coefficient standard errors."""

    values: np.ndarray
    stderrs: np.ndarray
    value_cov: np.ndarray

    def evaluate(self, lam: float) -> float:
        return float(np.polynomial.polynomial.polyval(lam, self.values))

    def stderr_at(self, lam: float) -> float:
        powers = lam ** np.arange(4)
        return float(math.sqrt(max(powers @ self.value_cov @ powers, 0.0)))


def analytic_coefficients(
    alpha: float, beta: float, m: float, T: float, control: Control
) -> CubicCoefficients:
    kappa = math.sqrt(m * m - m)
    moments = control.integrals(T)
    values = np.array(
        [
            0.0,
            beta * kappa / 2 * moments["t_psi"],
            -0.5 * moments["dpsi_sq"] + alpha * kappa / 4 * moments["psi_sq"],
            beta * kappa / 2 * moments["psi_cube"],
        ]
    )
    return CubicCoefficients(values, np.zeros(4), np.zeros((4, 4)))


@attrs.frozen(eq=False)
class _CriticalChunk:
    alpha: float
    beta: float
    kappa: float
    T: float
    n_steps: int
    control: Control
    seeds: np.ndarray
    signs: np.ndarray

    def __call__(self) -> np.ndarray:
        grid = np.linspace(0.0, self.T, self.n_steps + 1)
        psi = self.control.psi(grid, self.T)
        dpsi = self.control.dpsi(grid, self.T)
        d_b = drivers.batch_drivers(self.seeds, self.signs, 1, self.T, self.n_steps)
        start = np.zeros((len(self.seeds), 1))
        b = np.concatenate([start, d_b[:, 0].cumsum(axis=1)], axis=1)

        def trapezoid(y: np.ndarray) -> np.ndarray:
            return integrate.trapezoid(y, grid, axis=-1)

        def running(y: np.ndarray) -> np.ndarray:
            return integrate.cumulative_trapezoid(y, grid, axis=-1, initial=0.0)

        a, k = self.alpha, self.kappa
        # Each path's J is an exact cubic in lambda; these are its coefficients.
        c0 = -a * k / 24 * b[:, -1] ** 4 + a * k / 4 * trapezoid(b * b)
        c1 = a * k / 2 * trapezoid(b * psi) - self.beta * k / 2 * trapezoid(
            running(b * b) * dpsi
        )
        c2 = (
            -0.5 * trapezoid(dpsi * dpsi)
            + a * k / 4 * trapezoid(psi * psi)
            - self.beta * k * trapezoid(running(b * psi) * dpsi)
        )
        c3 = np.full(
            len(self.seeds),
            -self.beta * k / 2 * trapezoid(running(psi * psi) * dpsi),
        )
        return np.column_stack([c0, c1, c2, c3])


def monte_carlo_coefficients(
    alpha: float,
    beta: float,
    m: float,
    T: float,
    control: Control,
    config: SimConfig,
) -> CubicCoefficients:
    kappa = math.sqrt(m * m - m)
    n_steps = config.step_count(T)
    tasks = []
    for start in range(0, config.n_paths, config.chunk_size):
        stop = min(start + config.chunk_size, config.n_paths)
        seeds, signs = drivers.chunk_seeds(config.seed, start, stop, config.antithetic)
        tasks.append(
            _CriticalChunk(alpha, beta, kappa, T, n_steps, control, seeds, signs)
        )
    per_path = np.concatenate(run_chunks(tasks, config.workers))
    n = len(per_path)
    if n > 1:
        cov = np.cov(per_path, rowvar=False) / n
    else:
        cov = np.zeros((4, 4))
    return CubicCoefficients(
        per_path.mean(axis=0), np.sqrt(np.clip(np.diag(cov), 0.0, None)), cov
    )


def critical_coefficients(
    alpha: float,
    beta: float,
    m: float,
    T: float,
    control: Control,
    mc: SimConfig | None,
) -> CubicCoefficients:
    if mc is None:
        return analytic_coefficients(alpha, beta, m, T, control)
    return monte_carlo_coefficients(alpha, beta, m, T, control, mc)


def critical_case_functional(
    alpha: float,
    beta: float,
    m: float,
    T: float,
    lam: float,
    psi: str | Control = "sine",
    mc: SimConfig | None = None,
    rho: float | None = None,
) -> float:
    """
    The control objective at ``U = lam * psi``; closed form when ``mc`` is
    None, a Monte Carlo estimate otherwise.
    """
    _check_critical_inputs(alpha, m, T, rho)
    control = get_control(psi) if isinstance(psi, str) else psi
    return critical_coefficients(alpha, beta, m, T, control, mc).evaluate(lam)


def t_star(alpha: float, m: float) -> float:
    return math.sqrt(2 * math.pi**2 / (alpha * math.sqrt(m * m - m)))


class CriticalVerdict(enum.Enum):
    FINITE = "finite"
    INFINITE_QUADRATIC = "infinite_quadratic"
    INFINITE_CUBIC = "infinite_cubic"
    UNDETERMINED = "critical_undetermined"


@attrs.frozen(eq=False)
class CriticalCaseReport:
    alpha: float
    beta: float
    m: float
    T: float
    kappa: float
    t_star: float
    control: str
    lambda_grid: tuple[float, ...]
    values: tuple[float, ...]
    value_stderrs: tuple[float, ...]
    coefficients: tuple[float, ...]
    coefficient_stderrs: tuple[float, ...]
    verdict: CriticalVerdict
    mode: str
    seed: int | None = None

    @property
    def quadratic_coefficient(self) -> float:
        return self.coefficients[2]

    @property
    def cubic_coefficient(self) -> float:
        return self.coefficients[3]

    def to_json(self) -> dict[str, Any]:
        data = attrs.asdict(self)
        data["verdict"] = self.verdict.value
        for key in (
            "lambda_grid",
            "values",
            "value_stderrs",
            "coefficients",
            "coefficient_stderrs",
        ):
            data[key] = list(data[key])
        return data


DEFAULT_LAMBDA_GRID = (-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0)


def critical_case_report(
    alpha: float,
    beta: float,
    m: float,
    T: float,
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    mc: SimConfig | None = None,
    psi: str | Control = "sine",
    rho: float | None = None,
    confidence: float = 0.95,
) -> CriticalCaseReport:
    kappa = _check_critical_inputs(alpha, m, T, rho)
    grid = np.asarray(sorted(set(lambda_grid)), dtype=float)
    if len(grid) < 4:
        raise FitError(f"a cubic needs at least 4 distinct lambdas, got {len(grid)}")
    control = get_control(psi) if isinstance(psi, str) else psi
    cubic = critical_coefficients(alpha, beta, m, T, control, mc)
    values = np.array([cubic.evaluate(lam) for lam in grid])
    value_stderrs = np.array([cubic.stderr_at(lam) for lam in grid])

    # Least-squares cubic through the evaluated grid.
    fitted = np.polynomial.polynomial.polyfit(grid, values, 3)
    stderrs = cubic.stderrs
    z = _z(confidence)
    limit = t_star(alpha, m)

    if beta != 0 and abs(fitted[3]) > z * stderrs[3]:
        verdict = CriticalVerdict.INFINITE_CUBIC
    elif beta != 0:
        verdict = CriticalVerdict.UNDETERMINED
    elif abs(T - limit) <= CRITICAL_TOLERANCE * limit:
        verdict = CriticalVerdict.UNDETERMINED
    elif fitted[2] < 0:
        verdict = CriticalVerdict.FINITE
    else:
        verdict = CriticalVerdict.INFINITE_QUADRATIC

    return CriticalCaseReport(
        alpha=alpha,
        beta=beta,
        m=m,
        T=T,
        kappa=kappa,
        t_star=limit,
        control=control.name,
        lambda_grid=tuple(float(x) for x in grid),
        values=tuple(float(x) for x in values),
        value_stderrs=tuple(float(x) for x in value_stderrs),
        coefficients=tuple(float(x) for x in fitted),
        coefficient_stderrs=tuple(float(x) for x in stderrs),
        verdict=verdict,
        mode="analytic" if mc is None else "monte_carlo",
        seed=None if mc is None else mc.seed,
    )
