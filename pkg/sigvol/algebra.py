"""Exact free tensor algebra over a finite alphabet: words, shuffles, pairings."""

import functools
import math
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping
from fractions import Fraction
from types import MappingProxyType
from typing import Any, Protocol, Union

import attrs

from sigvol.exceptions import AlgebraError, InsufficientDepthError


Letter = int
Scalar = Union[int, Fraction]

EMPTY_WORD_SYMBOLS = ("", "ø")
SHUFFLE = "⧢"
MINUS = "−"


def _letters(value: Iterable[int]) -> tuple[int, ...]:
    return tuple(int(letter) for letter in value)


def _check_letters(instance: "Word", attribute: Any, value: tuple[int, ...]) -> None:
    if any(letter < 1 for letter in value):
        raise AlgebraError(f"letters are numbered from 1, got {value}")


@attrs.frozen
class Word:
    """A finite sequence of letters. Letter 1 is the time coordinate."""

    letters: tuple[int, ...] = attrs.field(
        default=(), converter=_letters, validator=_check_letters
    )

    @classmethod
    def parse(cls, text: str, alphabet_dim: int | None = None) -> "Word":
        """
        Read a word from its text form.

        Digit strings ("221") are used for alphabets of at most nine letters,
        dot separated indices ("1.2.10") otherwise.
        """
        text = text.strip()
        if text in EMPTY_WORD_SYMBOLS:
            return cls()
        if "." in text:
            parts = text.split(".")
        elif alphabet_dim is not None and alphabet_dim > 9 and len(text) > 1:
            raise AlgebraError(
                f"word {text!r} is ambiguous over {alphabet_dim} letters, "
                "separate letters with dots"
            )
        else:
            parts = list(text)
        if not all(part.isdigit() for part in parts):
            raise AlgebraError(f"malformed word {text!r}")
        word = cls(int(part) for part in parts)
        if alphabet_dim is not None:
            word.check_alphabet(alphabet_dim)
        return word

    def check_alphabet(self, alphabet_dim: int) -> None:
        if any(letter > alphabet_dim for letter in self.letters):
            raise AlgebraError(
                f"word {self} has letters outside an alphabet of size {alphabet_dim}"
            )

    def render(self, alphabet_dim: int | None = None) -> str:
        if not self.letters:
            return "ø"
        widest = alphabet_dim if alphabet_dim is not None else max(self.letters)
        if widest <= 9:
            return "".join(str(letter) for letter in self.letters)
        return ".".join(str(letter) for letter in self.letters)

    @property
    def sort_key(self) -> tuple[int, tuple[int, ...]]:
        # Graded lexicographic: by length, then letter by letter.
        return (len(self.letters), self.letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[int]:
        return iter(self.letters)

    def __add__(self, other: "Word") -> "Word":
        return concat(self, other)

    def __str__(self) -> str:
        return self.render()


def concat(w: Word, v: Word) -> Word:
    return Word(w.letters + v.letters)


def count_letter(w: Word, i: Letter) -> int:
    return w.letters.count(i)


def _canonical_terms(terms: Mapping[Any, Any]) -> Mapping[Word, Fraction]:
    cleaned: dict[Word, Fraction] = {}
    for word, coefficient in terms.items():
        if not isinstance(word, Word):
            word = Word(word)
        value = Fraction(coefficient)
        if value:
            cleaned[word] = cleaned.get(word, Fraction(0)) + value
    ordered = sorted(
        ((w, c) for w, c in cleaned.items() if c), key=lambda item: item[0].sort_key
    )
    return MappingProxyType(dict(ordered))


def _default_max_order(instance: "TensorPoly") -> int:
    return max((len(word) for word in instance.terms), default=0)


@attrs.frozen
class TensorPoly:
    """
    A finite linear combination of words with exact rational coefficients.

    Terms are kept in graded lexicographic order with zeros removed. Two
    polynomials compare equal when their terms do, whatever their declared
    alphabet size and order.
    """

    alphabet_dim: int = attrs.field(eq=False)
    terms: Mapping[Word, Fraction] = attrs.field(
        factory=dict, converter=_canonical_terms, eq=lambda terms: dict(terms)
    )
    max_order: int = attrs.field(
        eq=False, default=attrs.Factory(_default_max_order, takes_self=True)
    )

    def __attrs_post_init__(self) -> None:
        if self.alphabet_dim < 1:
            raise AlgebraError("alphabet_dim must be positive")
        if self.max_order < 0:
            raise AlgebraError("max_order must be non-negative")
        for word in self.terms:
            word.check_alphabet(self.alphabet_dim)
            if len(word) > self.max_order:
                raise AlgebraError(
                    f"word {word} is longer than max_order {self.max_order}"
                )

    @classmethod
    def zero(cls, alphabet_dim: int, max_order: int = 0) -> "TensorPoly":
        return cls(alphabet_dim, {}, max_order)

    @classmethod
    def unit(cls, alphabet_dim: int) -> "TensorPoly":
        return cls(alphabet_dim, {Word(): 1})

    @classmethod
    def of_word(
        cls, word: Word | str, alphabet_dim: int, coefficient: Scalar = 1
    ) -> "TensorPoly":
        if isinstance(word, str):
            word = Word.parse(word, alphabet_dim)
        return cls(alphabet_dim, {word: coefficient}, len(word))

    @classmethod
    def from_mapping(
        cls,
        terms: Mapping[str, Any],
        alphabet_dim: int,
        max_order: int | None = None,
    ) -> "TensorPoly":
        parsed = {
            Word.parse(text, alphabet_dim): value for text, value in terms.items()
        }
        if max_order is None:
            return cls(alphabet_dim, parsed)
        return cls(alphabet_dim, parsed, max_order)

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "TensorPoly":
        alphabet_dim = int(data["alphabet_dim"])
        terms: Counter[Word] = Counter()
        for term in data.get("terms", []):
            word = Word.parse(str(term["word"]), alphabet_dim)
            terms[word] += Fraction(int(term["num"]), int(term.get("den", 1)))
        if "max_order" in data:
            return cls(alphabet_dim, terms, int(data["max_order"]))
        return cls(alphabet_dim, terms)

    def to_json(self) -> dict[str, Any]:
        return {
            "alphabet_dim": self.alphabet_dim,
            "max_order": self.max_order,
            "terms": [
                {
                    "word": word.render(self.alphabet_dim),
                    "num": coefficient.numerator,
                    "den": coefficient.denominator,
                }
                for word, coefficient in self.terms.items()
            ],
        }

    def coefficient(self, word: Word | str) -> Fraction:
        if isinstance(word, str):
            word = Word.parse(word, self.alphabet_dim)
        return self.terms.get(word, Fraction(0))

    def is_zero(self) -> bool:
        return not self.terms

    def with_max_order(self, max_order: int) -> "TensorPoly":
        return TensorPoly(self.alphabet_dim, self.terms, max_order)

    def _check_same_alphabet(self, other: "TensorPoly") -> None:
        if self.alphabet_dim != other.alphabet_dim:
            raise AlgebraError(
                f"alphabet mismatch: {self.alphabet_dim} != {other.alphabet_dim}"
            )

    def __add__(self, other: "TensorPoly") -> "TensorPoly":
        self._check_same_alphabet(other)
        terms: Counter[Word] = Counter(self.terms)
        for word, coefficient in other.terms.items():
            terms[word] += coefficient
        return TensorPoly(
            self.alphabet_dim, terms, max(self.max_order, other.max_order)
        )

    def __neg__(self) -> "TensorPoly":
        return self * -1

    def __sub__(self, other: "TensorPoly") -> "TensorPoly":
        return self + (-other)

    def __mul__(self, scalar: Scalar) -> "TensorPoly":
        factor = Fraction(scalar)
        return TensorPoly(
            self.alphabet_dim,
            {word: factor * c for word, c in self.terms.items()},
            self.max_order,
        )

    __rmul__ = __mul__

    def render(self) -> str:
        """Text form, e.g. ``123 + 132 + 312`` or ``2·22``."""
        if not self.terms:
            return "0"
        return _render_sum(
            (coefficient, word.render(self.alphabet_dim))
            for word, coefficient in self.terms.items()
        )

    def __str__(self) -> str:
        return self.render()


def _render_sum(terms: Iterable[tuple[Fraction, str]]) -> str:
    pieces: list[str] = []
    for coefficient, body in terms:
        magnitude = abs(coefficient)
        text = body if magnitude == 1 else f"{magnitude}·{body}"
        if not pieces:
            pieces.append(f"{MINUS}{text}" if coefficient < 0 else text)
        else:
            pieces.append(f" {MINUS} {text}" if coefficient < 0 else f" + {text}")
    return "".join(pieces)


@functools.cache
def _shuffle_letters(
    v: tuple[int, ...], w: tuple[int, ...]
) -> Mapping[tuple[int, ...], int]:
    # (va) ⧢ (wb) = ((v ⧢ wb) a) + ((va ⧢ w) b)
    if not v:
        return MappingProxyType({w: 1})
    if not w:
        return MappingProxyType({v: 1})
    result: Counter[tuple[int, ...]] = Counter()
    for word, count in _shuffle_letters(v[:-1], w).items():
        result[word + v[-1:]] += count
    for word, count in _shuffle_letters(v, w[:-1]).items():
        result[word + w[-1:]] += count
    return MappingProxyType(dict(result))


def shuffle_words(v: Word, w: Word, alphabet_dim: int | None = None) -> TensorPoly:
    if alphabet_dim is None:
        alphabet_dim = max(v.letters + w.letters, default=1)
    return TensorPoly(
        alphabet_dim,
        dict(_shuffle_letters(v.letters, w.letters)),
        len(v) + len(w),
    )


def shuffle(p: TensorPoly, q: TensorPoly) -> TensorPoly:
    """Bilinear extension of the shuffle product of words."""
    p._check_same_alphabet(q)
    terms: Counter[tuple[int, ...]] = Counter()
    for v, a in p.terms.items():
        for w, b in q.terms.items():
            for word, count in _shuffle_letters(v.letters, w.letters).items():
                terms[word] += a * b * count
    return TensorPoly(p.alphabet_dim, terms, p.max_order + q.max_order)


def shuffle_pow(p: TensorPoly, k: int) -> TensorPoly:
    if k < 0:
        raise AlgebraError("shuffle powers are defined for k >= 0")
    result = TensorPoly.unit(p.alphabet_dim)
    for _ in range(k):
        result = shuffle(result, p)
    return result


def concatenate(p: TensorPoly, q: TensorPoly) -> TensorPoly:
    """Bilinear extension of word concatenation."""
    p._check_same_alphabet(q)
    terms: Counter[Word] = Counter()
    for v, a in p.terms.items():
        for w, b in q.terms.items():
            terms[concat(v, w)] += a * b
    return TensorPoly(p.alphabet_dim, terms, p.max_order + q.max_order)


def right_deconcat_by_letter(p: TensorPoly, i: Letter) -> TensorPoly:
    """Keep the words ending in ``i`` and strip that last letter."""
    terms = {
        Word(word.letters[:-1]): coefficient
        for word, coefficient in p.terms.items()
        if word.letters[-1:] == (i,)
    }
    return TensorPoly(p.alphabet_dim, terms, max(p.max_order - 1, 0))


def substitute_letters(
    p: TensorPoly, images: Mapping[Letter, TensorPoly], alphabet_dim: int
) -> TensorPoly:
    """
    Apply the algebra morphism sending each letter to a linear form.

    Letters missing from ``images`` are sent to themselves in the target
    alphabet. The images must be homogeneous of degree one.
    """
    for letter, image in images.items():
        if image.alphabet_dim != alphabet_dim:
            raise AlgebraError(f"image of letter {letter} has the wrong alphabet")
        if any(len(word) != 1 for word in image.terms):
            raise AlgebraError(f"image of letter {letter} is not a linear form")

    def image_of(letter: Letter) -> TensorPoly:
        if letter in images:
            return images[letter]
        return TensorPoly.of_word(Word((letter,)), alphabet_dim)

    result = TensorPoly.zero(alphabet_dim, p.max_order)
    for word, coefficient in p.terms.items():
        term = TensorPoly.unit(alphabet_dim)
        for letter in word:
            term = concatenate(term, image_of(letter))
        result = result + term * coefficient
    return result.with_max_order(p.max_order)


class SignatureLike(Protocol):  # nocoverage: protocol
    alphabet_dim: int
    level: int

    def entry(self, word: Word) -> Any: ...


def bracket(p: TensorPoly, s: SignatureLike) -> float:
    """The pairing ``<p, s>`` evaluated in floating point."""
    if s.alphabet_dim != p.alphabet_dim:
        raise AlgebraError(
            f"alphabet mismatch: polynomial over {p.alphabet_dim} letters, "
            f"signature over {s.alphabet_dim}"
        )
    if s.level < p.max_order:
        raise InsufficientDepthError(p.max_order, s.level)
    return math.fsum(
        float(coefficient) * float(s.entry(word))
        for word, coefficient in p.terms.items()
    )
