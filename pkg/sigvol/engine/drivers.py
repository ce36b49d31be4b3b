"""
Brownian increments, reproducible path by path.

Every path draws its own increments from a generator seeded with
``path_seed(master, index)``, so a path's noise does not depend on how paths
are grouped into work units.
"""

import math

import numpy as np

from sigvol.exceptions import ModelError


def path_seed(master_seed: int, index: int) -> int:
    """A 64-bit seed for path ``index``, split off ``master_seed``."""
    sequence = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(sequence.generate_state(1, np.uint64)[0])


def chunk_seeds(
    master_seed: int, start: int, stop: int, antithetic: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """
    Seeds and signs for paths ``start..stop-1``.

    With antithetic pairing, paths ``2j`` and ``2j + 1`` share a seed and
    the odd one flips the sign of every increment.
    """
    indices = np.arange(start, stop)
    if antithetic:
        seeds = [path_seed(master_seed, int(i) // 2) for i in indices]
        signs = np.where(indices % 2 == 1, -1.0, 1.0)
    else:
        seeds = [path_seed(master_seed, int(i)) for i in indices]
        signs = np.ones(len(indices))
    return np.array(seeds, dtype=np.uint64), signs


def _standard_increments(seed: int, n_rows: int, T: float, n_steps: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n_rows, n_steps)) * math.sqrt(T / n_steps)


def gen_drivers(
    rho: float, T: float, n_steps: int, path_seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Correlated increments ``(dB, dW)`` with ``dW = rho dB + sqrt(1-rho^2) dB'``."""
    if not abs(rho) <= 1:
        raise ModelError(f"rho must lie in [-1, 1], got {rho}")
    if n_steps < 1 or not T > 0:
        raise ModelError("need n_steps >= 1 and T > 0")
    z = _standard_increments(path_seed, 2, T, n_steps)
    d_b = z[0]
    d_w = rho * z[0] + math.sqrt(1 - rho * rho) * z[1]
    return d_b, d_w


def gen_factor_drivers(
    T: float, n_steps: int, n_extra: int, path_seed: int
) -> np.ndarray:
    """
    Independent increments, one row per driver: row 0 is ``B`` and rows
    ``1..n_extra`` are the extra factors. Rows 0 and 1 are the very draws
    ``gen_drivers`` correlates, so both models can share one noise.
    """
    if n_extra < 0:
        raise ModelError("n_extra must be non-negative")
    if n_steps < 1 or not T > 0:
        raise ModelError("need n_steps >= 1 and T > 0")
    z = _standard_increments(path_seed, max(2, 1 + n_extra), T, n_steps)
    return z[: 1 + n_extra]


def batch_drivers(
    seeds: np.ndarray, signs: np.ndarray, n_rows: int, T: float, n_steps: int
) -> np.ndarray:
    """Stacked raw increments of shape ``(paths, n_rows, n_steps)``."""
    rows = max(2, n_rows)
    out = np.empty((len(seeds), n_rows, n_steps))
    for i, (seed, sign) in enumerate(zip(seeds, signs)):
        out[i] = sign * _standard_increments(int(seed), rows, T, n_steps)[:n_rows]
    return out
