"""
Lyndon words and shuffle-polynomial decompositions.

Two comparison conventions are supported. ``DESCENDING`` calls a word Lyndon when
it is strictly greater than all its nontrivial rotations (so ``21`` and
``221`` are Lyndon over ``{1, 2}``), ``CLASSICAL`` when it is strictly
smaller. Internally every order is reduced to a classical comparison on
rank keys: the descending convention simply negates the ranks.
"""

import enum
import functools
import math
from collections import Counter
from collections.abc import Iterator, Mapping
from fractions import Fraction
from types import MappingProxyType
from typing import Any

import attrs

from sigvol.algebra import (
    MINUS,
    SHUFFLE,
    Scalar,
    TensorPoly,
    Word,
    shuffle,
    shuffle_pow,
)
from sigvol.exceptions import AlgebraError


class Convention(enum.Enum):
    DESCENDING = "descending"
    CLASSICAL = "classical"


@attrs.frozen
class LyndonOrder:
    convention: Convention = Convention.DESCENDING
    # ranks[letter - 1] is the rank of the letter; natural ranks when None.
    ranks: tuple[int, ...] | None = None

    def __attrs_post_init__(self) -> None:
        if self.ranks is not None and len(set(self.ranks)) != len(self.ranks):
            raise AlgebraError(f"letter ranks must be distinct, got {self.ranks}")

    def rank(self, letter: int) -> int:
        if self.ranks is None:
            return letter
        try:
            return self.ranks[letter - 1]
        except IndexError:
            raise AlgebraError(f"letter {letter} has no rank in {self.ranks}")

    def key(self, word: Word) -> tuple[int, ...]:
        """Key under which a Lyndon word is smaller than its rotations."""
        if self.convention is Convention.DESCENDING:
            return tuple(-self.rank(letter) for letter in word)
        return tuple(self.rank(letter) for letter in word)

    def sort_key(self, word: Word) -> tuple[int, tuple[int, ...]]:
        return (len(word), self.key(word))

    def favouring(self, letter: int, alphabet_dim: int) -> "LyndonOrder":
        """
        The order under which no Lyndon word other than ``letter`` itself
        ends with ``letter``: greatest for the descending convention, smallest for
        the classical one.
        """
        ranks = [self.rank(other) for other in range(1, alphabet_dim + 1)]
        if self.convention is Convention.DESCENDING:
            ranks[letter - 1] = max(ranks) + 1
        else:
            ranks[letter - 1] = min(ranks) - 1
        return LyndonOrder(self.convention, tuple(ranks))


DESCENDING_ORDER = LyndonOrder()
CLASSICAL_ORDER = LyndonOrder(Convention.CLASSICAL)


def is_lyndon(w: Word, order: LyndonOrder = DESCENDING_ORDER) -> bool:
    if not len(w):
        raise AlgebraError("the empty word is not a Lyndon word candidate")
    key = order.key(w)
    return all(key < key[i:] + key[:i] for i in range(1, len(key)))


def lyndon_words(
    alphabet_dim: int, max_len: int, order: LyndonOrder = DESCENDING_ORDER
) -> list[Word]:
    """All Lyndon words of length at most ``max_len``, shortest first."""
    if max_len < 1:
        raise AlgebraError("max_len must be at least 1")
    alphabet = sorted(
        range(1, alphabet_dim + 1), key=lambda letter: order.key(Word((letter,)))
    )
    size = len(alphabet)

    # Duval's generation: each pass yields the next Lyndon word in
    # lexicographic order of the (re-ranked) alphabet.
    words = []
    indices = [-1]
    while indices:
        indices[-1] += 1
        words.append(Word(alphabet[i] for i in indices))
        period = len(indices)
        while len(indices) < max_len:
            indices.append(indices[-period])
        while indices and indices[-1] == size - 1:
            indices.pop()
    return sorted(words, key=order.sort_key)


def lyndon_factorization(w: Word, order: LyndonOrder = DESCENDING_ORDER) -> list[Word]:
    """Chen–Fox–Lyndon factorization into non-increasing Lyndon words."""
    if not len(w):
        raise AlgebraError("cannot factorize the empty word")
    key = order.key(w)
    letters = w.letters
    n = len(key)
    factors = []
    i = 0
    while i < n:
        j, k = i + 1, i
        while j < n and key[k] <= key[j]:
            k = i if key[k] < key[j] else k + 1
            j += 1
        while i <= k:
            factors.append(Word(letters[i : i + j - k]))
            i += j - k
    return factors


def witt_count(alphabet_dim: int, length: int) -> int:
    """Number of Lyndon words of the given length."""
    total = sum(
        _moebius(e) * alphabet_dim ** (length // e)
        for e in range(1, length + 1)
        if length % e == 0
    )
    return total // length


def _moebius(n: int) -> int:
    result = 1
    p = 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            result = -result
        p += 1
    return -result if n > 1 else result


Monomial = tuple[tuple[Word, int], ...]


def _canonical_monomial(
    factors: Mapping[Word, int] | Monomial, order: LyndonOrder
) -> Monomial:
    powers: Counter[Word] = Counter()
    items = factors.items() if isinstance(factors, Mapping) else factors
    for word, power in items:
        powers[word] += power
    return tuple(
        sorted(
            ((word, power) for word, power in powers.items() if power),
            key=lambda item: order.key(item[0]),
            reverse=True,
        )
    )


@attrs.frozen
class ShufflePolynomial:
    """
    A polynomial, under the shuffle product, in Lyndon words.

    Each monomial is a tuple of ``(word, power)`` factors listed in
    non-increasing order.
    """

    alphabet_dim: int
    order: LyndonOrder
    terms: Mapping[Monomial, Fraction] = attrs.field(factory=dict)

    @classmethod
    def build(
        cls,
        alphabet_dim: int,
        order: LyndonOrder,
        terms: Mapping[Monomial, Scalar],
    ) -> "ShufflePolynomial":
        collected: Counter[Monomial] = Counter()
        for monomial, coefficient in terms.items():
            collected[_canonical_monomial(monomial, order)] += Fraction(coefficient)
        cleaned = {m: c for m, c in collected.items() if c}
        return cls(alphabet_dim, order, MappingProxyType(cleaned))

    @classmethod
    def unit(cls, alphabet_dim: int, order: LyndonOrder) -> "ShufflePolynomial":
        return cls.build(alphabet_dim, order, {(): 1})

    def __add__(self, other: "ShufflePolynomial") -> "ShufflePolynomial":
        terms: Counter[Monomial] = Counter(self.terms)
        for monomial, coefficient in other.terms.items():
            terms[monomial] += coefficient
        return ShufflePolynomial.build(self.alphabet_dim, self.order, terms)

    def __mul__(self, scalar: Scalar) -> "ShufflePolynomial":
        return ShufflePolynomial.build(
            self.alphabet_dim,
            self.order,
            {m: c * Fraction(scalar) for m, c in self.terms.items()},
        )

    __rmul__ = __mul__

    def __sub__(self, other: "ShufflePolynomial") -> "ShufflePolynomial":
        return self + other * -1

    def factor_words(self) -> Iterator[Word]:
        for monomial in self.terms:
            for word, _ in monomial:
                yield word

    def degrees(self) -> set[int]:
        """The values of sum(power * |word|) over monomials."""
        return {
            sum(power * len(word) for word, power in monomial)
            for monomial in self.terms
        }

    def _ordered_terms(self) -> list[tuple[Monomial, Fraction]]:
        def key(item: tuple[Monomial, Fraction]) -> Any:
            monomial = item[0]
            return (
                -sum(power for _, power in monomial),
                [self.order.sort_key(word) for word, _ in monomial],
            )

        return sorted(self.terms.items(), key=key)

    def render(self) -> str:
        """Text form, e.g. ``21 ⧢ 2 − 2·221``."""
        if not self.terms:
            return "0"
        pieces: list[str] = []
        for monomial, coefficient in self._ordered_terms():
            body = (
                f" {SHUFFLE} ".join(
                    word.render(self.alphabet_dim)
                    if power == 1
                    else f"{word.render(self.alphabet_dim)}^{SHUFFLE}{power}"
                    for word, power in monomial
                )
                or "ø"
            )
            magnitude = abs(coefficient)
            text = body if magnitude == 1 else f"{magnitude}·{body}"
            if not pieces:
                pieces.append(f"{MINUS}{text}" if coefficient < 0 else text)
            else:
                sign = MINUS if coefficient < 0 else "+"
                pieces.append(f" {sign} {text}")
        return "".join(pieces)

    def __str__(self) -> str:
        return self.render()


def expand(sp: ShufflePolynomial) -> TensorPoly:
    """Evaluate every shuffle power and product back into a TensorPoly."""
    d = sp.alphabet_dim
    result = TensorPoly.zero(d)
    for monomial, coefficient in sp.terms.items():
        term = TensorPoly.unit(d)
        for word, power in monomial:
            term = shuffle(term, shuffle_pow(TensorPoly.of_word(word, d), power))
        result = result + term * coefficient
    return result


@functools.lru_cache(maxsize=None)
def _radford(
    letters: tuple[int, ...], order: LyndonOrder, alphabet_dim: int
) -> ShufflePolynomial:
    word = Word(letters)
    if not letters:
        return ShufflePolynomial.unit(alphabet_dim, order)
    factors = lyndon_factorization(word, order)
    if len(factors) == 1:
        return ShufflePolynomial.build(alphabet_dim, order, {((word, 1),): 1})

    # Group equal consecutive factors: w = l1^k1 ... lr^kr.
    grouped: list[tuple[Word, int]] = []
    for factor in factors:
        if grouped and grouped[-1][0] == factor:
            grouped[-1] = (factor, grouped[-1][1] + 1)
        else:
            grouped.append((factor, 1))
    norm = Fraction(1, math.prod(math.factorial(power) for _, power in grouped))

    # l1^⧢k1 ⧢ ... ⧢ lr^⧢kr / (k1! ... kr!) = w + (terms triangular below w)
    product = TensorPoly.unit(alphabet_dim)
    for factor, power in grouped:
        product = shuffle(
            product, shuffle_pow(TensorPoly.of_word(factor, alphabet_dim), power)
        )
    remainder = product * norm - TensorPoly.of_word(word, alphabet_dim)

    result = ShufflePolynomial.build(alphabet_dim, order, {tuple(grouped): norm})
    for other, coefficient in remainder.terms.items():
        result = result - _radford(other.letters, order, alphabet_dim) * coefficient
    return result


def radford_decompose(
    w: Word, order: LyndonOrder = DESCENDING_ORDER, alphabet_dim: int | None = None
) -> ShufflePolynomial:
    """Express ``w`` as a shuffle polynomial in Lyndon words."""
    if alphabet_dim is None:
        alphabet_dim = max(w.letters, default=1)
    w.check_alphabet(alphabet_dim)
    return _radford(w.letters, order, alphabet_dim)


def avoid_letter_decompose(
    w: Word,
    k: int,
    order: LyndonOrder = DESCENDING_ORDER,
    alphabet_dim: int | None = None,
) -> ShufflePolynomial:
    """
    Decompose ``w`` so that every factor either does not end with ``k`` or
    equals the single letter ``k``.
    """
    if alphabet_dim is None:
        alphabet_dim = max(w.letters + (k,))
    if not 1 <= k <= alphabet_dim:
        raise AlgebraError(f"letter {k} is outside an alphabet of size {alphabet_dim}")
    return radford_decompose(w, order.favouring(k, alphabet_dim), alphabet_dim)
