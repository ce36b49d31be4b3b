import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from pytest_subtests import SubTests

from sigvol.algebra import (
    TensorPoly,
    Word,
    bracket,
    concat,
    concatenate,
    count_letter,
    right_deconcat_by_letter,
    shuffle,
    shuffle_pow,
    shuffle_words,
    substitute_letters,
)
from sigvol.exceptions import AlgebraError, InsufficientDepthError
from sigvol.signature import PathSample, path_signature, segment_sig


def poly(terms: dict[str, object], alphabet_dim: int = 2) -> TensorPoly:
    return TensorPoly.from_mapping(terms, alphabet_dim)


def random_poly(
    rng: np.random.Generator, max_len: int, n_terms: int = 3, alphabet_dim: int = 2
) -> TensorPoly:
    terms: dict[Word, Fraction] = {}
    for _ in range(n_terms):
        length = int(rng.integers(0, max_len + 1))
        letters = rng.integers(1, alphabet_dim + 1, size=length)
        coefficient = Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 4)))
        terms[Word(int(letter) for letter in letters)] = coefficient
    return TensorPoly(alphabet_dim, terms, max_len)


def random_path(rng: np.random.Generator, n_points: int = 6) -> PathSample:
    times = np.cumsum(rng.uniform(0.1, 0.5, n_points))
    return PathSample(times, rng.standard_normal(n_points)).time_augmented()


def words_up_to(max_len: int, alphabet_dim: int = 2) -> list[Word]:
    return [
        Word(letters)
        for n in range(max_len + 1)
        for letters in itertools.product(range(1, alphabet_dim + 1), repeat=n)
    ]


class TestWord:
    def test_parse(self, subtests: SubTests) -> None:
        cases = [
            ("221", (2, 2, 1)),
            ("", ()),
            ("ø", ()),
            ("1.2.10", (1, 2, 10)),
        ]
        for text, letters in cases:
            with subtests.test(msg=text):
                assert Word.parse(text).letters == letters

    def test_malformed(self) -> None:
        with pytest.raises(AlgebraError):
            Word.parse("2x1")

    def test_letter_zero(self) -> None:
        with pytest.raises(AlgebraError):
            Word((0, 1))

    def test_outside_alphabet(self) -> None:
        with pytest.raises(AlgebraError):
            Word.parse("13", alphabet_dim=2)

    def test_ambiguous_wide_alphabet(self) -> None:
        with pytest.raises(AlgebraError):
            Word.parse("12", alphabet_dim=11)

    def test_render(self) -> None:
        assert Word((2, 2, 1)).render() == "221"
        assert Word().render() == "ø"
        assert Word((1, 10)).render() == "1.10"

    def test_concat(self, subtests: SubTests) -> None:
        cases = [("21", "1", "211"), ("", "12", "12"), ("12", "3", "123")]
        for w, v, expected in cases:
            with subtests.test(msg=f"{w}.{v}"):
                assert concat(Word.parse(w), Word.parse(v)) == Word.parse(expected)

    def test_count_letter(self) -> None:
        assert count_letter(Word.parse("221"), 2) == 2
        assert count_letter(Word(), 2) == 0
        assert count_letter(Word.parse("2221"), 1) == 1


class TestTensorPoly:
    def test_zero_terms_dropped(self) -> None:
        p = poly({"1": 1, "2": 0})
        assert list(p.terms) == [Word((1,))]

    def test_graded_lexicographic_order(self) -> None:
        p = poly({"21": 1, "2": 1, "12": 1, "ø": 1})
        assert [w.render() for w in p.terms] == ["ø", "2", "12", "21"]

    def test_max_order_too_small(self) -> None:
        with pytest.raises(AlgebraError):
            TensorPoly(2, {Word((1, 2)): 1}, 1)

    def test_alphabet_mismatch(self) -> None:
        with pytest.raises(AlgebraError):
            poly({"1": 1}) + poly({"1": 1}, alphabet_dim=3)

    def test_render(self) -> None:
        assert poly({"12": Fraction(1, 2), "21": -1}).render() == "1/2·12 − 21"
        assert poly({}).render() == "0"

    def test_json_round_trip(self) -> None:
        p = poly({"ø": Fraction(-1, 3), "221": 4})
        assert TensorPoly.from_json(p.to_json()) == p


class TestShuffle:
    def test_examples(self, subtests: SubTests) -> None:
        cases = [
            ("12", "3", {"123": 1, "132": 1, "312": 1}, 3),
            ("", "21", {"21": 1}, 2),
            ("21", "", {"21": 1}, 2),
            ("2", "2", {"22": 2}, 2),
        ]
        for v, w, expected, d in cases:
            with subtests.test(msg=f"{v} ⧢ {w}"):
                product = shuffle_words(Word.parse(v), Word.parse(w), d)
                assert product == poly(expected, d)

    def test_coefficient_sum_is_binomial(self) -> None:
        for n, m in itertools.product(range(4), repeat=2):
            v = Word((1,) * n)
            w = Word((2,) * m)
            product = shuffle_words(v, w, 2)
            assert sum(product.terms.values()) == math.comb(n + m, n)

    def test_unit_is_neutral(self) -> None:
        p = poly({"1": 1, "2": 1})
        assert shuffle(p, TensorPoly.unit(2)) == p

    def test_commutative_and_associative(self) -> None:
        a = poly({"1": 1, "21": 2})
        b = poly({"2": -1, "12": Fraction(1, 3)})
        c = poly({"ø": 1, "22": 1})
        assert shuffle(a, b) == shuffle(b, a)
        assert shuffle(shuffle(a, b), c) == shuffle(a, shuffle(b, c))

    def test_random_commutative_and_associative(self) -> None:
        rng = np.random.default_rng(5)
        for _ in range(30):
            a, b = random_poly(rng, 3), random_poly(rng, 3)
            assert shuffle(a, b) == shuffle(b, a)
            a, b, c = (random_poly(rng, 2) for _ in range(3))
            assert shuffle(shuffle(a, b), c) == shuffle(a, shuffle(b, c))

    def test_coefficient_mass_and_letter_counts(self) -> None:
        candidates = words_up_to(8)
        for v in candidates:
            for w in candidates:
                if len(v) + len(w) > 8:
                    continue
                product = shuffle_words(v, w, 2)
                assert sum(product.terms.values()) == math.comb(
                    len(v) + len(w), len(v)
                )
                counts = [count_letter(v, i) + count_letter(w, i) for i in (1, 2)]
                for u in product.terms:
                    assert [count_letter(u, i) for i in (1, 2)] == counts

    def test_shuffle_property_on_random_paths(self) -> None:
        rng = np.random.default_rng(3)
        for _ in range(100):
            signature = path_signature(random_path(rng), 4)
            split = int(rng.integers(0, 5))
            p, q = random_poly(rng, split), random_poly(rng, 4 - split)
            left = bracket(p, signature) * bracket(q, signature)
            right = bracket(shuffle(p, q), signature)
            assert abs(left - right) <= 1e-9 * (1 + abs(left) + abs(right))

    def test_powers(self, subtests: SubTests) -> None:
        with subtests.test(msg="2^2"):
            assert shuffle_pow(poly({"2": 1}), 2) == poly({"22": 2})
        with subtests.test(msg="1^3"):
            assert shuffle_pow(poly({"1": 1}), 3) == poly({"111": 6})
        with subtests.test(msg="p^0"):
            assert shuffle_pow(poly({"12": 5}), 0) == TensorPoly.unit(2)

    def test_negative_power(self) -> None:
        with pytest.raises(AlgebraError):
            shuffle_pow(poly({"1": 1}), -1)

    def test_shuffle_property(self) -> None:
        path = PathSample([0.0, 0.3, 0.7, 1.0], [[0.0], [0.4], [-0.2], [0.5]])
        signature = path_signature(path.time_augmented(), 4)
        p = poly({"12": 1, "2": -2})
        q = poly({"21": Fraction(1, 2), "1": 1})
        assert bracket(shuffle(p, q), signature) == pytest.approx(
            bracket(p, signature) * bracket(q, signature), rel=1e-12
        )


class TestBracket:
    def test_empty_word(self) -> None:
        signature = segment_sig([0.3, -1.2], 2)
        assert bracket(TensorPoly.unit(2), signature) == 1.0

    def test_increment(self) -> None:
        path = PathSample([0.0, 0.5, 1.0], [[1.0], [3.0], [0.5]])
        signature = path_signature(path.time_augmented(), 1)
        assert bracket(poly({"2": 1}), signature) == pytest.approx(-0.5)

    def test_level_two(self) -> None:
        signature = segment_sig([0.25, 0.6], 2)
        assert bracket(poly({"22": 1}), signature) == pytest.approx(0.18)

    def test_linearity(self) -> None:
        rng = np.random.default_rng(8)
        for _ in range(20):
            signature = path_signature(random_path(rng), 4)
            p, q = random_poly(rng, 4), random_poly(rng, 4)
            a, b = Fraction(int(rng.integers(-4, 5)), 3), Fraction(1, 7)
            combined = bracket(p * a + q * b, signature)
            expected = float(a) * bracket(p, signature) + float(b) * bracket(
                q, signature
            )
            assert combined == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_insufficient_depth(self) -> None:
        signature = segment_sig([0.25, 0.6], 1)
        with pytest.raises(InsufficientDepthError, match="insufficient signature"):
            bracket(poly({"22": 1}), signature)

    def test_alphabet_mismatch(self) -> None:
        with pytest.raises(AlgebraError):
            bracket(poly({"1": 1}), segment_sig([1.0, 2.0, 3.0], 1))


class TestDeconcatenation:
    def test_examples(self, subtests: SubTests) -> None:
        cases = [
            ({"222": 1, "221": 1}, {"22": 1}),
            ({"1": 1}, {}),
            ({"12": 3, "22": 2}, {"1": 3, "2": 2}),
        ]
        for terms, expected in cases:
            with subtests.test(msg=str(terms)):
                assert right_deconcat_by_letter(poly(terms), 2) == poly(expected)


class TestConcatenate:
    def test_distributes(self) -> None:
        p = poly({"1": 1, "2": 2})
        q = poly({"2": 1})
        assert concatenate(p, q) == poly({"12": 1, "22": 2})


class TestSubstituteLetters:
    def test_linear_image(self) -> None:
        image = poly({"2": 1, "3": 1}, alphabet_dim=3)
        result = substitute_letters(poly({"12": 1}), {2: image}, alphabet_dim=3)
        assert result == poly({"12": 1, "13": 1}, alphabet_dim=3)

    def test_identity_on_missing_letters(self) -> None:
        result = substitute_letters(poly({"21": 1}), {}, alphabet_dim=3)
        assert result == poly({"21": 1}, alphabet_dim=3)

    def test_rejects_non_linear_image(self) -> None:
        image = poly({"22": 1}, alphabet_dim=3)
        with pytest.raises(AlgebraError):
            substitute_letters(poly({"2": 1}), {2: image}, alphabet_dim=3)
