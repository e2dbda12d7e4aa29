import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distillery.core import (
    RngStream,
    check_simplex,
    cross_entropy,
    log_softmax,
    log_sum_exp,
    one_hot,
    sample_standard_normal,
    softmax,
)

finite_logits = st.lists(
    st.floats(min_value=-100.0, max_value=100.0, allow_nan=False),
    min_size=1,
    max_size=8,
).map(np.array)


class TestLogSumExp:
    def test_single_zero(self):
        assert log_sum_exp([0.0]) == 0.0

    def test_two_zeros(self):
        assert log_sum_exp([0.0, 0.0]) == pytest.approx(math.log(2), abs=1e-15)

    def test_shift_invariance_no_overflow(self):
        assert log_sum_exp([1000.0, 1000.0]) == pytest.approx(1000 + math.log(2), abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            log_sum_exp([])


class TestSoftmax:
    def test_symmetry(self):
        np.testing.assert_allclose(softmax([0.0, 0.0, 0.0]), [1 / 3] * 3, atol=1e-15)

    def test_hand_value(self):
        # exp(ln 2) = 2, exp(0) = 1  ->  (2/3, 1/3)
        np.testing.assert_allclose(softmax([math.log(2), 0.0]), [2 / 3, 1 / 3], atol=1e-12)

    def test_infinite_temperature_limit(self):
        np.testing.assert_allclose(softmax([5.0, -3.0, 1.0], T=1e6), [1 / 3] * 3, atol=1e-5)

    def test_temperature_is_logit_rescaling(self):
        z = np.array([3.0, -1.0, 0.5, 2.0])
        for T in (0.5, 1.0, 7.0, 50.0):
            assert np.array_equal(softmax(z, T), softmax(z / T, 1.0))

    @given(finite_logits, st.floats(min_value=-100, max_value=100))
    @settings(max_examples=200, deadline=None)
    def test_shift_invariance(self, z, c):
        np.testing.assert_allclose(softmax(z + c), softmax(z), atol=1e-12)

    @given(finite_logits)
    @settings(max_examples=200, deadline=None)
    def test_valid_simplex_output(self, z):
        p = softmax(z)
        assert abs(p.sum() - 1.0) <= 1e-9
        assert np.all(p > 0)

    def test_monotone_sharpening(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            z = rng.normal(size=rng.integers(2, 9)) * 10
            temps = [0.1, 0.5, 1.0, 2.0, 10.0, 100.0]
            peaks = [softmax(z, T).max() for T in temps]
            assert all(a >= b - 1e-15 for a, b in zip(peaks, peaks[1:]))

    def test_argmax_preserved_across_temperatures(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            z = rng.normal(size=5) * 3
            for T in (0.01, 1.0, 250.0):
                assert np.argmax(softmax(z, T)) == np.argmax(z)

    def test_tied_logits_break_to_lowest_index(self):
        assert np.argmax(softmax([1.0, 1.0, 0.0])) == 0

    def test_bad_temperature(self):
        for T in (0.0, -1.0, math.nan):
            with pytest.raises(ValueError):
                softmax([1.0, 2.0], T)

    def test_nonfinite_logits(self):
        with pytest.raises(ValueError):
            softmax([1.0, math.inf])
        with pytest.raises(ValueError):
            softmax([math.nan, 0.0])


class TestCrossEntropy:
    def test_confident_correct_prediction(self):
        assert cross_entropy([1.0, 0.0], [1000.0, -1000.0]) <= 1e-9

    def test_uniform_vs_uniform(self):
        assert cross_entropy([0.5, 0.5], [0.0, 0.0]) == pytest.approx(math.log(2), abs=1e-15)

    def test_matching_distribution_gives_entropy(self):
        # oracle: -sum y log y computed directly
        y = np.array([0.3, 0.7])
        oracle = -sum(v * math.log(v) for v in y)
        assert cross_entropy(y, np.log(y)) == pytest.approx(oracle, abs=1e-12)
        assert oracle == pytest.approx(0.61086, abs=5e-6)

    def test_finite_for_extreme_logits(self):
        # log of a stored probability would give -inf here
        v = cross_entropy([0.0, 1.0], [800.0, -800.0])
        assert math.isfinite(v) and v == pytest.approx(1600.0, rel=1e-12)

    def test_invalid_simplex_rejected(self):
        with pytest.raises(ValueError):
            cross_entropy([0.4, 0.4], [0.0, 0.0])
        with pytest.raises(ValueError):
            cross_entropy([-0.2, 1.2], [0.0, 0.0])

    def test_gibbs_inequality(self):
        # cross_entropy(y, z) >= entropy(y), 10^4 random cases
        rng = np.random.default_rng(11)
        for _ in range(10_000):
            c = rng.integers(2, 6)
            y = rng.dirichlet(np.ones(c))
            z = rng.normal(size=c) * rng.uniform(0.1, 30)
            with np.errstate(divide="ignore", invalid="ignore"):
                ent = float(-np.sum(np.where(y > 0, y * np.log(y), 0.0)))
            assert cross_entropy(y, z) >= ent - 1e-9


class TestCheckSimplex:
    def test_one_hot_passes(self):
        check_simplex(one_hot(2, 4))

    def test_one_hot_bounds(self):
        with pytest.raises(ValueError):
            one_hot(4, 4)

    def test_tolerance(self):
        check_simplex(np.array([0.5, 0.5 + 5e-10]))
        with pytest.raises(ValueError):
            check_simplex(np.array([0.5, 0.51]))


class TestLogSoftmax:
    def test_agrees_with_softmax(self):
        z = np.array([0.3, -2.0, 5.5])
        np.testing.assert_allclose(np.exp(log_softmax(z, 2.0)), softmax(z, 2.0), rtol=1e-12)


class TestRngStream:
    def test_repeatable(self):
        a = sample_standard_normal(RngStream(42, 7), 1000)
        b = sample_standard_normal(RngStream(42, 7), 1000)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = sample_standard_normal(RngStream(42, 0), 100)
        b = sample_standard_normal(RngStream(42, 1), 100)
        assert not np.array_equal(a, b)

    def test_fork_is_deterministic(self):
        s = RngStream(9)
        assert s.fork("train", 3) == s.fork("train", 3)
        assert s.fork("train", 3) != s.fork("train", 4)
        assert s.fork("train") != s.fork("test")

    def test_fork_key_types(self):
        s = RngStream(1)
        s.fork(0)
        s.fork(1.5, "x", 2)
        with pytest.raises(ValueError):
            s.fork()
        with pytest.raises(TypeError):
            s.fork(object())

    def test_value_semantics(self):
        s = RngStream(5, 2)
        g1 = s.generator()
        g1.standard_normal(10)  # consuming one generator does not advance the stream
        g2 = s.generator()
        assert np.array_equal(g2.standard_normal(3), RngStream(5, 2).generator().standard_normal(3))


class TestSampleStandardNormal:
    def test_moments(self):
        x = sample_standard_normal(RngStream(123, 1), 1_000_000)
        assert abs(x.mean()) < 0.01  # 4 sigma / sqrt(n) = 0.004
        assert abs(x.var() - 1.0) < 0.01

    def test_n_validation(self):
        with pytest.raises(ValueError):
            sample_standard_normal(RngStream(0), 0)
