"""Coefficient tensors for experiments."""

import itertools
import math
from fractions import Fraction

import numpy as np

from sigvol.algebra import TensorPoly, Word, substitute_letters
from sigvol.exceptions import ModelError


def random_coefficients(
    alphabet_dim: int,
    order: int,
    leading: float,
    seed: int,
    low: float = -0.5,
    high: float = 0.5,
) -> TensorPoly:
    """
    Uniform coefficients on every word up to ``order``, drawn in graded
    lexicographic word order from ``seed``, with the ``2...2`` coefficient
    replaced by ``leading``.
    """
    if order < 0:
        raise ModelError("order must be non-negative")
    if not low <= high:
        raise ModelError("need low <= high")
    rng = np.random.default_rng(seed)
    lead = Word((2,) * order)
    terms: dict[Word, Fraction] = {}
    for n in range(order + 1):
        for letters in itertools.product(range(1, alphabet_dim + 1), repeat=n):
            word = Word(letters)
            terms[word] = Fraction(float(rng.uniform(low, high)))
    terms[lead] = Fraction(leading)
    return TensorPoly(alphabet_dim, terms, order)


def correlated_embedding(sigma: TensorPoly, rho: float) -> TensorPoly:
    """
    Rewrite a one-factor coefficient tensor over ``(t, B, Z)``, with
    ``W = rho B + sqrt(1 - rho^2) Z``.
    """
    if sigma.alphabet_dim != 2:
        raise ModelError("only one-factor tensors can be embedded")
    if not abs(rho) <= 1:
        raise ModelError(f"rho must lie in [-1, 1], got {rho}")
    rho_bar = math.sqrt(1 - rho * rho)
    image = TensorPoly(3, {Word((2,)): Fraction(rho), Word((3,)): Fraction(rho_bar)}, 1)
    return substitute_letters(sigma, {2: image}, alphabet_dim=3)
