"""Closed forms the simulators are checked against."""

import math

from sigvol.exceptions import ModelError


def _check_polynomial_ode(c: float, N: int) -> None:
    if N < 2:
        raise ModelError(f"x' = c x^{N} does not blow up for N < 2")
    if not c > 0:
        raise ModelError("c must be positive")


def passage_time(c: float, N: int, a: float, b: float) -> float:
    """Time for ``x' = c x^N`` to travel from ``a`` to ``b`` (``0 < a <= b``)."""
    _check_polynomial_ode(c, N)
    if not 0 < a <= b:
        raise ModelError("need 0 < a <= b")
    upper = 0.0 if math.isinf(b) else b ** (1 - N)
    return (a ** (1 - N) - upper) / (c * (N - 1))


def ode_blowup_time(c: float, N: int, x0: float) -> float:
    """Blow-up time of ``x' = c x^N`` started at ``x0 > 0``."""
    if not x0 > 0:
        raise ModelError("x0 must be positive")
    return passage_time(c, N, x0, math.inf)


def level_passage_time(sigma_lead: float, N: int, n: float) -> float:
    """
    Time for ``x' = sigma_lead x^N / N!`` to go from ``n - 1`` to ``n + 1``.
    """
    if not n > 1:
        raise ModelError("n must exceed 1")
    return passage_time(sigma_lead / math.factorial(N), N, n - 1, n + 1)


def lognormal_moment(s0: float, vol: float, T: float, m: float) -> float:
    """``E[S_T^m]`` for a driftless geometric Brownian motion."""
    return s0**m * math.exp(0.5 * m * (m - 1) * vol * vol * T)
