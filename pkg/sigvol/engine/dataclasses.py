"""Value types shared by the simulators and the experiment layer."""

import enum
import math
from collections.abc import Iterator
from fractions import Fraction
from typing import Any

import attrs
import numpy as np

from sigvol.algebra import TensorPoly, Word
from sigvol.exceptions import ModelError


class Mode(enum.Enum):
    ONE_FACTOR = "1d"
    MULTI_FACTOR = "multid"


@attrs.frozen
class ModelParams:
    """
    A signature volatility model.

    In one-factor mode the alphabet is ``{1: t, 2: W}``; in multi-factor
    mode letter 2 is the price driver ``B`` and letters 3.. are independent
    factors, and ``rho`` is not used.
    """

    alphabet_dim: int
    order: int
    sigma: TensorPoly = attrs.field(hash=False)
    rho: float
    s0: float
    horizon: float
    mode: Mode = Mode.ONE_FACTOR

    def __attrs_post_init__(self) -> None:
        if self.mode is Mode.ONE_FACTOR and self.alphabet_dim != 2:
            raise ModelError("the one-factor model has alphabet_dim 2")
        if self.mode is Mode.MULTI_FACTOR and self.alphabet_dim < 2:
            raise ModelError("the multi-factor model needs alphabet_dim >= 2")
        if self.sigma.alphabet_dim != self.alphabet_dim:
            raise ModelError(
                f"sigma is over {self.sigma.alphabet_dim} letters, "
                f"the model over {self.alphabet_dim}"
            )
        if self.order < 0 or self.sigma.max_order != self.order:
            raise ModelError(
                f"sigma has order {self.sigma.max_order}, expected {self.order}"
            )
        if not abs(self.rho) <= 1:
            raise ModelError(f"rho must lie in [-1, 1], got {self.rho}")
        if not self.s0 > 0:
            raise ModelError(f"s0 must be positive, got {self.s0}")
        if not self.horizon > 0:
            raise ModelError(f"horizon must be positive, got {self.horizon}")

    @property
    def leading_coefficient(self) -> Fraction:
        """The coefficient of ``2...2`` (``order`` times)."""
        return self.sigma.coefficient(Word((2,) * self.order))

    @property
    def n_factors(self) -> int:
        return self.alphabet_dim - 1

    def to_json(self) -> dict[str, Any]:
        return {
            "alphabet_dim": self.alphabet_dim,
            "order": self.order,
            "sigma": self.sigma.to_json(),
            "rho": self.rho,
            "s0": self.s0,
            "horizon": self.horizon,
            "mode": self.mode.value,
        }


@attrs.frozen
class SimConfig:
    n_paths: int
    n_steps: int
    seed: int
    x_cap: float = 1e4
    antithetic: bool = False
    workers: int = 1
    kappa: float = 0.1
    chunk_size: int = 4096
    # Sub-steps grow with max(1, |X|) instead of being capped by kappa alone.
    scale_substeps: bool = False

    def __attrs_post_init__(self) -> None:
        if self.n_paths < 1:
            raise ModelError("n_paths must be at least 1")
        if self.n_steps < 1:
            raise ModelError("n_steps must be at least 1")
        if not 0 < self.x_cap < math.inf:
            raise ModelError("x_cap must be positive and finite")
        if self.workers < 1:
            raise ModelError("workers must be at least 1")
        if not self.kappa > 0:
            raise ModelError("kappa must be positive")
        if self.chunk_size < 1:
            raise ModelError("chunk_size must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ModelError("seed must be a 64-bit unsigned integer")

    def step_count(self, horizon: float) -> int:
        """Number of outer steps over ``horizon`` (``n_steps`` is per unit)."""
        return max(1, round(self.n_steps * horizon))

    def to_json(self) -> dict[str, Any]:
        return attrs.asdict(self)


@attrs.frozen
class PriceSample:
    terminal_price: float
    realized_variance: float
    path_seed: int
    valid: bool = True


@attrs.frozen(eq=False)
class PriceSampleSet:
    """Columnar Monte Carlo output; row ``i`` belongs to path ``i``."""

    terminal_prices: np.ndarray
    realized_variances: np.ndarray
    path_seeds: np.ndarray
    valid: np.ndarray

    def __len__(self) -> int:
        return len(self.terminal_prices)

    def __iter__(self) -> Iterator[PriceSample]:
        for price, variance, seed, valid in zip(
            self.terminal_prices, self.realized_variances, self.path_seeds, self.valid
        ):
            yield PriceSample(float(price), float(variance), int(seed), bool(valid))

    @classmethod
    def from_prices(cls, prices: Any) -> "PriceSampleSet":
        prices = np.asarray(prices, dtype=float)
        return cls(
            prices,
            np.zeros_like(prices),
            np.arange(len(prices), dtype=np.uint64),
            np.isfinite(prices),
        )

    @property
    def n_invalid(self) -> int:
        return int((~self.valid).sum())

    def valid_prices(self) -> np.ndarray:
        return self.terminal_prices[self.valid]

    def valid_variances(self) -> np.ndarray:
        return self.realized_variances[self.valid]


@attrs.frozen
class ExplosionStats:
    n_exploded: int
    n_paths: int
    p_hat: float
    ci95: tuple[float, float]
    cap_used: float
    mean_exit_time: float | None
    n_exploded_double_cap: int
    p_hat_double_cap: float
    step_size: float
    seed: int

    @property
    def cap_sensitivity(self) -> float:
        """Change of ``p_hat`` when the cap is doubled."""
        return self.p_hat - self.p_hat_double_cap

    @property
    def ci_width(self) -> float:
        return self.ci95[1] - self.ci95[0]

    def to_json(self) -> dict[str, Any]:
        data = attrs.asdict(self)
        data["ci95"] = list(self.ci95)
        data["cap_sensitivity"] = self.cap_sensitivity
        return data
