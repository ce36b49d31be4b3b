"""
Black–Scholes pricing, implied volatility and smiles from Monte Carlo
samples. Rates and dividends are zero throughout.
"""

import logging
import math
from collections.abc import Sequence

import attrs
import numpy as np
from scipy import optimize, special, stats

from sigvol.engine.dataclasses import PriceSampleSet
from sigvol.exceptions import FitError

logger = logging.getLogger(__name__)

SMILE_COLUMNS = (
    "strike",
    "k",
    "put_iv",
    "put_lo",
    "put_hi",
    "call_iv",
    "call_lo",
    "call_hi",
    "n_effective",
)

# Reasons an implied volatility can be missing.
AT_OR_BELOW_INTRINSIC = "at_or_below_intrinsic"
AT_OR_ABOVE_UPPER_BOUND = "at_or_above_upper_bound"
NOT_FINITE = "not_finite"
NO_BRACKET = "no_bracket"


def bs_price(s0: float, strike: float, T: float, vol: float, is_call: bool) -> float:
    if vol < 0:
        raise ValueError("vol must be non-negative")
    total_vol = vol * math.sqrt(T)
    if total_vol == 0:
        return max(s0 - strike, 0.0) if is_call else max(strike - s0, 0.0)
    d1 = math.log(s0 / strike) / total_vol + 0.5 * total_vol
    d2 = d1 - total_vol
    if is_call:
        return float(s0 * special.ndtr(d1) - strike * special.ndtr(d2))
    return float(strike * special.ndtr(-d2) - s0 * special.ndtr(-d1))


def price_bounds(s0: float, strike: float, is_call: bool) -> tuple[float, float]:
    """No-arbitrage bounds ``(intrinsic, upper)``."""
    if is_call:
        return max(s0 - strike, 0.0), s0
    return max(strike - s0, 0.0), strike


@attrs.frozen
class ImpliedVol:
    value: float | None
    reason: str | None = None

    @property
    def missing(self) -> bool:
        return self.value is None


def solve_implied_vol(
    price: float, s0: float, strike: float, T: float, is_call: bool
) -> ImpliedVol:
    if not math.isfinite(price):
        return ImpliedVol(None, NOT_FINITE)
    intrinsic, upper = price_bounds(s0, strike, is_call)
    if price <= intrinsic:
        return ImpliedVol(None, AT_OR_BELOW_INTRINSIC)
    if price >= upper:
        return ImpliedVol(None, AT_OR_ABOVE_UPPER_BOUND)

    # Invert the out-of-the-money option: its price carries all the
    # time value and none of the intrinsic value.
    call_price = price if is_call else price + s0 - strike
    otm_call = strike >= s0
    target = call_price if otm_call else call_price - s0 + strike

    def excess(vol: float) -> float:
        return bs_price(s0, strike, T, vol, otm_call) - target

    high = 1.0
    for _ in range(64):
        if excess(high) > 0:
            break
        high *= 2
    else:
        return ImpliedVol(None, NO_BRACKET)
    vol = optimize.brentq(excess, 0.0, high, xtol=1e-15, rtol=1e-15, maxiter=500)
    return ImpliedVol(float(vol))


def implied_vol(
    price: float, s0: float, strike: float, T: float, is_call: bool
) -> float | None:
    return solve_implied_vol(price, s0, strike, T, is_call).value


def _iv_endpoint(
    price: float, s0: float, strike: float, T: float, is_call: bool
) -> float | None:
    intrinsic, upper = price_bounds(s0, strike, is_call)
    if price <= intrinsic:
        return 0.0
    if price >= upper:
        return math.inf
    return implied_vol(price, s0, strike, T, is_call)


@attrs.frozen
class SmileRow:
    strike: float
    k: float
    put_iv: float | None
    put_ci: tuple[float, float] | None
    call_iv: float | None
    call_ci: tuple[float, float] | None
    n_effective: int
    put_floored: bool = False
    call_floored: bool = False

    def cis_overlap(self) -> bool | None:
        """Whether the put and call IV intervals meet; None if either is missing."""
        if self.put_ci is None or self.call_ci is None:
            return None
        return self.put_ci[0] <= self.call_ci[1] and self.call_ci[0] <= self.put_ci[1]

    def to_csv_row(self) -> list[str]:
        def cell(value: float | None) -> str:
            return "" if value is None else repr(float(value))

        put_lo, put_hi = self.put_ci or (None, None)
        call_lo, call_hi = self.call_ci or (None, None)
        return [
            cell(self.strike),
            cell(self.k),
            cell(self.put_iv),
            cell(put_lo),
            cell(put_hi),
            cell(self.call_iv),
            cell(call_lo),
            cell(call_hi),
            str(self.n_effective),
        ]


def _option_side(
    payoffs: np.ndarray,
    s0: float,
    strike: float,
    T: float,
    is_call: bool,
    z: float,
) -> tuple[float | None, tuple[float, float] | None, bool]:
    n = len(payoffs)
    mean = float(payoffs.mean())
    stderr = float(payoffs.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    intrinsic, _ = price_bounds(s0, strike, is_call)
    floored = mean < intrinsic
    if floored:
        logger.warning(
            "%s price %.6g at strike %g is below intrinsic %.6g, floored",
            "call" if is_call else "put",
            mean,
            strike,
            intrinsic,
        )
        return None, None, True
    iv = implied_vol(mean, s0, strike, T, is_call)
    if iv is None:
        return None, None, False
    lo = _iv_endpoint(mean - z * stderr, s0, strike, T, is_call)
    hi = _iv_endpoint(mean + z * stderr, s0, strike, T, is_call)
    if lo is None or hi is None:
        return iv, None, False
    return iv, (lo, hi), False


def smile_from_samples(
    samples: PriceSampleSet,
    s0: float,
    T: float,
    strikes: Sequence[float],
    confidence: float = 0.95,
) -> list[SmileRow]:
    prices = samples.valid_prices()
    if not len(prices):
        raise ValueError("no valid samples to build a smile from")
    z = float(special.ndtri(0.5 + confidence / 2))
    rows = []
    for strike in strikes:
        calls = np.maximum(prices - strike, 0.0)
        puts = np.maximum(strike - prices, 0.0)
        put_iv, put_ci, put_floored = _option_side(puts, s0, strike, T, False, z)
        call_iv, call_ci, call_floored = _option_side(calls, s0, strike, T, True, z)
        out_of_the_money = calls if strike >= s0 else puts
        rows.append(
            SmileRow(
                strike=float(strike),
                k=math.log(strike / s0),
                put_iv=put_iv,
                put_ci=put_ci,
                call_iv=call_iv,
                call_ci=call_ci,
                n_effective=int(np.count_nonzero(out_of_the_money)),
                put_floored=put_floored,
                call_floored=call_floored,
            )
        )
    return rows


def theoretical_lee_slope(rho: float) -> tuple[float, float]:
    """Right-wing slope ``beta_R`` and critical moment exponent ``p_bar``."""
    if not abs(rho) <= 1:
        raise ValueError(f"rho must lie in [-1, 1], got {rho}")
    a = abs(rho)
    beta_r = 2 * (1 - a) / (1 + a)
    p_bar = math.inf if a == 1 else rho * rho / (1 - rho * rho)
    return beta_r, p_bar


@attrs.frozen
class WingReport:
    slope_hat: float
    beta_r: float
    p_bar: float
    fit_range: tuple[float, float]
    stderr: float
    intercept: float
    n_points: int

    @property
    def relative_error(self) -> float:
        return abs(self.slope_hat - self.beta_r) / self.beta_r

    def to_json(self) -> dict[str, object]:
        data = attrs.asdict(self)
        data["fit_range"] = list(self.fit_range)
        return data


def wing_slope(
    rows: Sequence[SmileRow],
    T: float,
    fit_range: tuple[float, float],
    rho: float,
) -> WingReport:
    """Least-squares slope of call ``iv^2 T`` against ``k`` over ``fit_range``."""
    k_lo, k_hi = fit_range
    usable = [
        row
        for row in rows
        if k_lo <= row.k <= k_hi and row.call_iv is not None and row.call_iv > 0
    ]
    if len(usable) < 3:
        raise FitError(
            f"{len(usable)} usable call rows in k range [{k_lo}, {k_hi}], need 3"
        )
    k = np.array([row.k for row in usable])
    total_variance = np.array([row.call_iv for row in usable]) ** 2 * T
    fit = stats.linregress(k, total_variance)
    beta_r, p_bar = theoretical_lee_slope(rho)
    return WingReport(
        slope_hat=float(fit.slope),
        beta_r=beta_r,
        p_bar=p_bar,
        fit_range=(k_lo, k_hi),
        stderr=float(fit.stderr),
        intercept=float(fit.intercept),
        n_points=len(usable),
    )
