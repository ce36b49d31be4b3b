"""
Truncated signatures of piecewise-linear paths.

Level ``n`` of a signature is stored as a flat array of ``d**n`` entries in
row-major word order, so the entry of word ``i1...in`` sits at
``sum((ik - 1) * d**(n - k))``. The kernels below work on any number of
leading batch axes, which is what the Monte Carlo engine relies on to
advance many paths at once.
"""

import csv
import itertools
from collections.abc import Iterator, Sequence
from fractions import Fraction
from pathlib import Path
from typing import Any

import attrs
import numpy as np
import numpy.typing as npt

from sigvol.algebra import TensorPoly, Word
from sigvol.exceptions import SignatureError

Levels = list[np.ndarray]


def word_index(word: Word, alphabet_dim: int) -> int:
    index = 0
    for letter in word:
        index = index * alphabet_dim + (letter - 1)
    return index


def words_of_length(alphabet_dim: int, n: int) -> Iterator[Word]:
    """Words of length ``n`` in the same order as the dense index."""
    for letters in itertools.product(range(1, alphabet_dim + 1), repeat=n):
        yield Word(letters)


def _divide(array: np.ndarray, n: int) -> np.ndarray:
    if array.dtype == object:
        return array * Fraction(1, n)
    return array / n


def tensor_exp(increments: npt.ArrayLike, level: int) -> Levels:
    """Signature of straight segments; ``increments`` has shape ``(..., d)``."""
    increments = np.asarray(increments)
    batch = increments.shape[:-1]
    levels: Levels = [np.ones(batch + (1,), dtype=increments.dtype)]
    for n in range(1, level + 1):
        outer = levels[-1][..., :, None] * increments[..., None, :]
        levels.append(_divide(outer.reshape(batch + (-1,)), n))
    return levels


def chen_product(a: Levels, b: Levels, level: int) -> Levels:
    """Truncated concatenation product, level by level."""
    result: Levels = []
    for n in range(level + 1):
        total = None
        for k in range(n + 1):
            left, right = a[k], b[n - k]
            term = (left[..., :, None] * right[..., None, :]).reshape(
                np.broadcast_shapes(left.shape[:-1], right.shape[:-1]) + (-1,)
            )
            total = term if total is None else total + term
        result.append(total)
    return result


def identity_levels(alphabet_dim: int, level: int, exact: bool = False) -> Levels:
    dtype = object if exact else float
    levels = [np.zeros(alphabet_dim**n, dtype=dtype) for n in range(level + 1)]
    if exact:
        for tensor in levels:
            tensor[:] = Fraction(0)
    levels[0][0] = Fraction(1) if exact else 1.0
    return levels


def _as_points(value: Any) -> np.ndarray:
    points = np.asarray(value)
    if points.dtype != object:
        points = points.astype(float)
    if points.ndim == 1:
        points = points[:, None]
    return points


@attrs.frozen
class PathSample:
    times: np.ndarray = attrs.field(converter=lambda v: np.asarray(v, dtype=float))
    points: np.ndarray = attrs.field(converter=_as_points)

    def __attrs_post_init__(self) -> None:
        if self.times.ndim != 1 or len(self.times) < 1:
            raise SignatureError("a path needs at least one sample time")
        if self.points.ndim != 2 or len(self.points) != len(self.times):
            raise SignatureError(
                f"{len(self.times)} times but {len(self.points)} points"
            )
        if self.points.shape[1] < 1:
            raise SignatureError("points must have at least one coordinate")
        if np.any(np.diff(self.times) <= 0):
            raise SignatureError("sample times must be strictly increasing")

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def time_augmented(self) -> "PathSample":
        """The path ``(t, x)`` with time as coordinate 1."""
        column = self.times.astype(self.points.dtype)[:, None]
        return PathSample(self.times, np.hstack([column, self.points]))

    def concatenated(self, other: "PathSample") -> "PathSample":
        """Join ``other`` after this path, translating it to start at the end."""
        if other.dim != self.dim:
            raise SignatureError("cannot join paths of different dimension")
        times = other.times[1:] - other.times[0] + self.times[-1]
        points = other.points[1:] - other.points[0] + self.points[-1]
        return PathSample(
            np.concatenate([self.times, times]), np.vstack([self.points, points])
        )


@attrs.frozen(eq=False)
class TruncSig:
    """A signature truncated at ``level``; read-only once built."""

    alphabet_dim: int
    level: int
    tensors: tuple[np.ndarray, ...] = attrs.field(converter=tuple)

    def __attrs_post_init__(self) -> None:
        if len(self.tensors) != self.level + 1:
            raise SignatureError(
                f"expected {self.level + 1} levels, got {len(self.tensors)}"
            )
        for n, tensor in enumerate(self.tensors):
            if tensor.shape != (self.alphabet_dim**n,):
                raise SignatureError(f"level {n} has shape {tensor.shape}")
            if tensor.dtype != object:
                tensor.setflags(write=False)

    @classmethod
    def identity(
        cls, alphabet_dim: int, level: int, exact: bool = False
    ) -> "TruncSig":
        return cls(alphabet_dim, level, identity_levels(alphabet_dim, level, exact))

    def entry(self, word: Word | str) -> Any:
        if isinstance(word, str):
            word = Word.parse(word, self.alphabet_dim)
        word.check_alphabet(self.alphabet_dim)
        if len(word) > self.level:
            raise SignatureError(
                f"word {word} is longer than the signature level {self.level}"
            )
        return self.tensors[len(word)][word_index(word, self.alphabet_dim)]

    def entries(self) -> Iterator[tuple[Word, Any]]:
        """All entries in graded lexicographic order."""
        for n, tensor in enumerate(self.tensors):
            for word, value in zip(words_of_length(self.alphabet_dim, n), tensor):
                yield word, value

    def to_json(self) -> dict[str, Any]:
        return {
            "level": self.level,
            "entries": [
                {"word": word.render(self.alphabet_dim), "value": float(value)}
                for word, value in self.entries()
                if value != 0
            ],
        }


def segment_sig(
    increment: Sequence[Any] | np.ndarray, level: int, exact: bool = False
) -> TruncSig:
    if level < 0:
        raise SignatureError("level must be non-negative")
    increment = np.asarray(increment, dtype=object if exact else float)
    if exact:
        increment = np.array([Fraction(x) for x in increment], dtype=object)
    if increment.ndim != 1 or not increment.size:
        raise SignatureError("an increment is a non-empty vector")
    return TruncSig(increment.size, level, tensor_exp(increment, level))


def chen_mul(a: TruncSig, b: TruncSig) -> TruncSig:
    if a.alphabet_dim != b.alphabet_dim or a.level != b.level:
        raise SignatureError(
            f"cannot multiply signatures over ({a.alphabet_dim}, level {a.level}) "
            f"and ({b.alphabet_dim}, level {b.level})"
        )
    return TruncSig(
        a.alphabet_dim, a.level, chen_product(list(a.tensors), list(b.tensors), a.level)
    )


def path_signature(path: PathSample, level: int, exact: bool = False) -> TruncSig:
    """Exact signature of the piecewise-linear interpolation of ``path``."""
    if level < 0:
        raise SignatureError("level must be non-negative")
    increments = np.diff(path.points, axis=0)
    if exact:
        increments = np.vectorize(Fraction, otypes=[object])(increments)
    result = TruncSig.identity(path.dim, level, exact)
    if not len(increments):
        return result
    tensors = list(result.tensors)
    segments = tensor_exp(increments, level)
    for i in range(len(increments)):
        tensors = chen_product(tensors, [s[i] for s in segments], level)
    return TruncSig(path.dim, level, tensors)


def scale_coordinate(path: PathSample, coord: int, c: float) -> PathSample:
    if not 1 <= coord <= path.dim:
        raise SignatureError(f"coordinate {coord} is outside 1..{path.dim}")
    points = path.points.copy()
    points[:, coord - 1] = points[:, coord - 1] * c
    return PathSample(path.times, points)


def expected_sig_time_bm(
    T: float, bm_dim: int, level: int, exact: bool = False
) -> TruncSig:
    """
    Expected signature of ``(t, W^1, ..., W^b)`` at ``T``: the truncated
    exponential of ``T*e1 + T/2 * sum(ei ei)`` over the Brownian letters.
    """
    if T < 0:
        raise SignatureError("T must be non-negative")
    if bm_dim < 0 or level < 0:
        raise SignatureError("bm_dim and level must be non-negative")
    d = bm_dim + 1
    horizon: Any = Fraction(T) if exact else float(T)
    generator = identity_levels(d, level, exact)
    generator[0] = generator[0] * 0
    if level >= 1:
        generator[1][0] = horizon
    if level >= 2:
        for letter in range(2, d + 1):
            generator[2][word_index(Word((letter, letter)), d)] = horizon / 2

    total = identity_levels(d, level, exact)
    term = [tensor.copy() for tensor in total]
    for k in range(1, level + 1):
        term = [_divide(t, k) for t in chen_product(term, generator, level)]
        total = [a + b for a, b in zip(total, term)]
    return TruncSig(d, level, total)


def dense_coefficients(p: TensorPoly, level: int) -> Levels:
    """``p`` laid out like a signature, so ``<p, s> = sum(c_n . s_n)``."""
    d = p.alphabet_dim
    coefficients = [np.zeros(d**n) for n in range(level + 1)]
    for word, value in p.terms.items():
        if len(word) > level:
            raise SignatureError(f"word {word} is deeper than level {level}")
        coefficients[len(word)][word_index(word, d)] = float(value)
    return coefficients


def pair_dense(coefficients: Levels, state: Levels) -> np.ndarray:
    """Batched ``<p, s>`` over the leading axes of ``state``."""
    return sum(
        (s @ c for c, s in zip(coefficients, state) if c.any()),
        start=np.zeros(state[0].shape[:-1]),
    )


def read_path_csv(path: Path | str) -> PathSample:
    """Read a ``t,x1,...,xd`` CSV file."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = [column.strip() for column in next(reader)]
        except StopIteration:
            raise SignatureError(f"{path} is empty")
        expected = ["t"] + [f"x{i}" for i in range(1, len(header))]
        if len(header) < 2 or header != expected:
            raise SignatureError(f"{path}: expected header {','.join(expected)}")
        try:
            rows = [[float(cell) for cell in row] for row in reader if row]
        except ValueError as e:
            raise SignatureError(f"{path}: {e}")
    if not rows or any(len(row) != len(header) for row in rows):
        raise SignatureError(f"{path}: ragged or empty rows")
    data = np.array(rows)
    if not np.all(np.isfinite(data)):
        raise SignatureError(f"{path}: non-finite values")
    return PathSample(data[:, 0], data[:, 1:])

