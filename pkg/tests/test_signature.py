import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from numpy.polynomial import Polynomial
from pytest_subtests import SubTests

from sigvol.algebra import Word, count_letter
from sigvol.exceptions import SignatureError
from sigvol.signature import (
    PathSample,
    TruncSig,
    chen_mul,
    chen_product,
    expected_sig_time_bm,
    identity_levels,
    path_signature,
    read_path_csv,
    scale_coordinate,
    segment_sig,
    tensor_exp,
    word_index,
    words_of_length,
)


def iterated_integral(points: np.ndarray, word: Word) -> float:
    """
    One signature entry of a piecewise-linear path, integrating the
    polynomial pieces segment by segment.
    """
    increments = np.diff(np.asarray(points, dtype=float), axis=0)
    starts = [1.0] + [0.0] * len(word)
    for v in increments:
        piece = Polynomial([1.0])
        ends = [1.0]
        for k, letter in enumerate(word, start=1):
            piece = starts[k] + v[letter - 1] * piece.integ()
            ends.append(float(piece(1.0)))
        starts = ends
    return starts[-1]


def assert_matches_oracle(signature: TruncSig, points: np.ndarray, tol: float) -> None:
    for n in range(signature.level + 1):
        for word in words_of_length(signature.alphabet_dim, n):
            assert signature.entry(word) == pytest.approx(
                iterated_integral(points, word), abs=tol
            )


def brownian_signatures(
    n_paths: int, n_steps: int, level: int, seed: int
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Batched signatures of time-augmented Brownian paths on ``[0, 1]``."""
    rng = np.random.default_rng(seed)
    h = 1.0 / n_steps
    increments = np.stack(
        [
            np.full((n_paths, n_steps), h),
            rng.standard_normal((n_paths, n_steps)) * math.sqrt(h),
        ],
        axis=-1,
    )
    state = [
        np.broadcast_to(tensor, (n_paths, tensor.size)).copy()
        for tensor in identity_levels(2, level)
    ]
    for step in range(n_steps):
        state = chen_product(state, tensor_exp(increments[:, step], level), level)
    return increments, state


def assert_matches_expected_signature(
    subtests: SubTests, state: list[np.ndarray]
) -> None:
    level = len(state) - 1
    expected = expected_sig_time_bm(1.0, 1, level)
    for n in range(level + 1):
        for word in words_of_length(2, n):
            with subtests.test(msg=word.render(2)):
                values = state[n][:, word_index(word, 2)]
                stderr = values.std() / math.sqrt(len(values))
                assert abs(values.mean() - expected.entry(word)) <= 4 * stderr + 1e-9


class TestSegment:
    def test_tensor_exponential(self) -> None:
        signature = segment_sig([0.5, -2.0], 3)
        assert signature.entry("1") == 0.5
        assert signature.entry("21") == pytest.approx(-0.5)
        assert signature.entry("222") == pytest.approx(-8 / 6)

    def test_zero_increment_is_identity(self) -> None:
        signature = segment_sig([0.0, 0.0, 0.0], 3)
        identity = TruncSig.identity(3, 3)
        for a, b in zip(signature.tensors, identity.tensors):
            np.testing.assert_array_equal(a, b)

    def test_exact(self) -> None:
        signature = segment_sig([1, 2], 3, exact=True)
        assert signature.entry("222") == Fraction(4, 3)
        assert signature.entry("12") == Fraction(1)

    def test_read_only(self) -> None:
        signature = segment_sig([1.0, 2.0], 2)
        with pytest.raises(ValueError):
            signature.tensors[1][0] = 3.0

    def test_entry_beyond_level(self) -> None:
        with pytest.raises(SignatureError):
            segment_sig([1.0, 2.0], 2).entry("222")


class TestChen:
    def test_identity(self) -> None:
        s = segment_sig([0.3, 1.1], 3)
        product = chen_mul(s, TruncSig.identity(2, 3))
        for a, b in zip(product.tensors, s.tensors):
            np.testing.assert_allclose(a, b)

    def test_collinear_segments(self) -> None:
        u = np.array([0.2, -0.4, 0.1])
        product = chen_mul(segment_sig(u, 4), segment_sig(2.5 * u, 4))
        direct = segment_sig(3.5 * u, 4)
        for a, b in zip(product.tensors, direct.tensors):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)

    def test_two_segments_against_quadrature(self) -> None:
        points = np.array([[0.0, 0.0], [0.4, 1.0], [1.0, -0.5]])
        first, second = np.diff(points, axis=0)
        product = chen_mul(segment_sig(first, 3), segment_sig(second, 3))
        assert_matches_oracle(product, points, 1e-9)

    def test_mismatch(self) -> None:
        with pytest.raises(SignatureError):
            chen_mul(segment_sig([1.0, 2.0], 2), segment_sig([1.0, 2.0], 3))
        with pytest.raises(SignatureError):
            chen_mul(segment_sig([1.0, 2.0], 2), segment_sig([1.0, 2.0, 3.0], 2))


class TestPathSignature:
    def test_brownian_sample_against_quadrature(self) -> None:
        rng = np.random.default_rng(7)
        times = np.linspace(0.0, 1.0, 51)
        steps = rng.standard_normal(50) * np.sqrt(0.02)
        walk = np.concatenate([[0.0], steps.cumsum()])
        path = PathSample(times, walk).time_augmented()
        assert_matches_oracle(path_signature(path, 3), path.points, 1e-6)

    def test_staircase(self) -> None:
        path = PathSample([0.0, 1.0, 2.0, 3.0], [0.0, 0.0, 1.5, 1.5])
        signature = path_signature(path.time_augmented(), 2)
        assert signature.entry("22") == pytest.approx(1.5**2 / 2)

    def test_single_point(self) -> None:
        signature = path_signature(PathSample([0.0], [[1.0, 2.0]]), 2)
        assert signature.entry(Word()) == 1.0
        assert not signature.tensors[1].any()

    def test_concatenation_is_chen_product(self) -> None:
        a = PathSample([0.0, 0.5, 1.0], [[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]])
        b = PathSample([0.0, 1.0], [[2.0, 2.0], [1.0, 3.0]])
        joined = path_signature(a.concatenated(b), 3)
        product = chen_mul(path_signature(a, 3), path_signature(b, 3))
        for x, y in zip(joined.tensors, product.tensors):
            np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-14)

    def test_exact_path(self) -> None:
        path = PathSample([0, 1, 2], [[0], [1], [3]])
        signature = path_signature(path, 2, exact=True)
        assert signature.entry("11") == Fraction(9, 2)

    def test_non_increasing_times(self) -> None:
        with pytest.raises(SignatureError):
            PathSample([0.0, 1.0, 1.0], [0.0, 1.0, 2.0])

    def test_to_json_skips_zeros(self) -> None:
        data = segment_sig([0.0, 2.0], 2).to_json()
        assert data == {
            "level": 2,
            "entries": [
                {"word": "ø", "value": 1.0},
                {"word": "2", "value": 2.0},
                {"word": "22", "value": 2.0},
            ],
        }


class TestScaleCoordinate:
    def test_homogeneity(self) -> None:
        path = PathSample([0.0, 0.3, 1.0], [[0.0, 0.0], [0.2, 1.0], [1.0, -1.0]])
        c = -1.7
        scaled = path_signature(scale_coordinate(path, 2, c), 4)
        original = path_signature(path, 4)
        for word, value in original.entries():
            expected = value * c ** count_letter(word, 2)
            assert scaled.entry(word) == pytest.approx(expected, rel=1e-12, abs=1e-14)

    def test_trivial_factors(self, subtests: SubTests) -> None:
        path = PathSample([0.0, 1.0], [[1.0, 2.0], [3.0, 5.0]])
        with subtests.test(msg="c = 1"):
            same = scale_coordinate(path, 1, 1.0)
            np.testing.assert_array_equal(same.points, path.points)
        with subtests.test(msg="c = 0"):
            assert not scale_coordinate(path, 2, 0.0).points[:, 1].any()

    def test_bad_coordinate(self) -> None:
        path = PathSample([0.0, 1.0], [[1.0], [3.0]])
        with pytest.raises(SignatureError):
            scale_coordinate(path, 2, 1.0)


class TestExpectedSignature:
    def test_time_and_one_brownian_motion(self) -> None:
        T = 0.7
        signature = expected_sig_time_bm(T, 1, 4)
        assert signature.entry("1") == pytest.approx(T)
        assert signature.entry("2") == 0.0
        assert signature.entry("22") == pytest.approx(T / 2)
        assert signature.entry("11") == pytest.approx(T**2 / 2)
        # E[W_T^4] / 4! = 3 T^2 / 24
        assert signature.entry("2222") == pytest.approx(T**2 / 8)
        assert signature.entry("122") == pytest.approx(T**2 / 4)

    def test_exact(self) -> None:
        signature = expected_sig_time_bm(Fraction(1, 2), 2, 2, exact=True)
        assert signature.entry("33") == Fraction(1, 4)
        assert signature.entry("23") == 0

    def test_no_brownian_motion(self) -> None:
        signature = expected_sig_time_bm(2.0, 0, 3)
        assert signature.entry("111") == pytest.approx(8 / 6)

    def test_against_monte_carlo(self, subtests: SubTests) -> None:
        increments, state = brownian_signatures(4000, 100, 4, seed=11)
        times = np.linspace(0.0, 1.0, 101)
        walk = np.concatenate([[0.0], increments[0, :, 1].cumsum()])
        single = path_signature(PathSample(times, walk).time_augmented(), 4)
        for n, tensor in enumerate(single.tensors):
            np.testing.assert_allclose(state[n][0], tensor, rtol=1e-10, atol=1e-14)
        assert_matches_expected_signature(subtests, state)

    @pytest.mark.slow
    def test_against_monte_carlo_at_desk_scale(self, subtests: SubTests) -> None:
        _, state = brownian_signatures(100_000, 200, 4, seed=12)
        assert_matches_expected_signature(subtests, state)

    def test_negative_horizon(self) -> None:
        with pytest.raises(SignatureError):
            expected_sig_time_bm(-1.0, 1, 2)


class TestReadPathCsv:
    def test_reads(self, tmp_path: Path) -> None:
        source = tmp_path / "path.csv"
        source.write_text("t,x1,x2\n0,0,0\n0.5,1,2\n1,0,1\n")
        path = read_path_csv(source)
        assert path.dim == 2
        np.testing.assert_array_equal(path.times, [0.0, 0.5, 1.0])

    def test_bad_header(self, tmp_path: Path) -> None:
        source = tmp_path / "path.csv"
        source.write_text("time,x\n0,0\n")
        with pytest.raises(SignatureError):
            read_path_csv(source)

    def test_bad_value(self, tmp_path: Path) -> None:
        source = tmp_path / "path.csv"
        source.write_text("t,x1\n0,0\n1,abc\n")
        with pytest.raises(SignatureError):
            read_path_csv(source)
