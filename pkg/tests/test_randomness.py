import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nestedpf.randomness import (
    AllWeightsDegenerate,
    NotPSD,
    RngStream,
    categorical_rows,
    effective_sample_size,
    normalize,
    normalize_rows,
    psd_factor,
    resample,
    resample_rows,
    sample_gaussian,
)

finite_logs = arrays(np.float64, st.integers(1, 30), elements=st.floats(-700, 700))


# ---- streams


def test_same_key_same_sequence():
    a, b = RngStream(42, (3, 1)), RngStream(42, (3, 1))
    assert np.array_equal(a.standard_normal(100), b.standard_normal(100))


def test_int_and_tuple_ids_agree():
    assert np.array_equal(RngStream(1, 5).uniform(10), RngStream(1, (5,)).uniform(10))


def test_distinct_ids_are_uncorrelated():
    a = RngStream(7, 0).standard_normal(200_000)
    b = RngStream(7, 1).standard_normal(200_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.01
    assert not np.array_equal(a[:10], b[:10])


def test_substream_is_keyed_by_extended_id():
    parent = RngStream(9, (2,))
    assert np.array_equal(parent.substream(4).uniform(5), RngStream(9, (2, 4)).uniform(5))


def test_reset_rewinds():
    s = RngStream(3)
    first = s.standard_normal(4)
    s.reset()
    assert np.array_equal(first, s.standard_normal(4))


# ---- normalize


def test_normalize_uniform():
    np.testing.assert_allclose(normalize([0, 0, 0]).weights, [1 / 3] * 3, rtol=0, atol=1e-15)


def test_normalize_ratio():
    np.testing.assert_allclose(normalize([np.log(2), 0]).weights, [2 / 3, 1 / 3], rtol=0, atol=1e-15)


def test_normalize_far_tail():
    w = normalize([-1000, -1001, -1002]).weights
    np.testing.assert_allclose(w, [0.66524, 0.24473, 0.09003], atol=1e-5)


def test_normalize_all_neg_inf_raises():
    with pytest.raises(AllWeightsDegenerate):
        normalize([-np.inf, -np.inf])
    with pytest.raises(AllWeightsDegenerate):
        normalize([np.nan, -np.inf])


def test_normalize_ignores_nan_entries():
    np.testing.assert_array_equal(normalize([np.nan, 0.0]).weights, [0.0, 1.0])


@given(finite_logs)
def test_normalize_sums_to_one(lw):
    w = normalize(lw)
    assert abs(w.weights.sum() - 1) < 1e-12
    assert np.all(w.weights >= 0) and w.weights.max() > 0
    np.testing.assert_allclose(np.exp(w.log_weights), w.weights, rtol=1e-12, atol=1e-300)


@given(arrays(np.float64, st.integers(1, 20), elements=st.integers(-500, 500).map(float)),
       st.integers(-10**6, 10**6))
def test_normalize_shift_invariant_exact(lw, c):
    # integer-valued inputs: every shift is exact in floating point, so equality is exact
    assert np.array_equal(normalize(lw).weights, normalize(lw + c).weights)


@given(finite_logs, st.floats(-1e3, 1e3))
def test_normalize_shift_invariant_general(lw, c):
    np.testing.assert_allclose(normalize(lw).weights, normalize(lw + c).weights, rtol=1e-9, atol=1e-300)


def test_normalize_rows_resets_degenerate_rows():
    lw, bad = normalize_rows(np.array([[0.0, np.log(3)], [-np.inf, -np.inf]]))
    np.testing.assert_allclose(np.exp(lw), [[0.25, 0.75], [0.5, 0.5]])
    assert bad.tolist() == [False, True]


# ---- ess


def test_ess_examples():
    assert effective_sample_size(np.full(10, 0.1)) == pytest.approx(10)
    assert effective_sample_size([1.0, 0, 0]) == 1
    assert effective_sample_size([0.5, 0.5, 0, 0]) == 2


@given(finite_logs)
def test_ess_range(lw):
    w = normalize(lw).weights
    assert 1 - 1e-9 <= effective_sample_size(w) <= len(w) + 1e-9


# ---- gaussian


def test_zero_covariance_draw_is_mean():
    np.testing.assert_array_equal(sample_gaussian(RngStream(0), [0, 0], np.zeros((2, 2))), [0, 0])


def test_sample_covariance_large_n():
    cov = np.array([[1, 0.1], [0.1, 1]])
    draws = sample_gaussian(RngStream(1), [0, 0], cov, size=10**6)
    assert np.abs(np.cov(draws.T) - cov).max() < 0.01


def test_gaussian_determinism_contract():
    s = RngStream(5)
    a = sample_gaussian(s, [0, 0], np.eye(2))
    b = sample_gaussian(s, [0, 0], np.eye(2))
    assert not np.array_equal(a, b)
    s.reset()
    assert np.array_equal(a, sample_gaussian(s, [0, 0], np.eye(2)))


def test_psd_factor_singular_is_lower_triangular():
    cov = np.array([[1.0, 1.0], [1.0, 1.0]])
    L = psd_factor(cov)
    np.testing.assert_allclose(L @ L.T, cov, atol=1e-12)
    assert L[0, 1] == 0


def test_not_psd():
    with pytest.raises(NotPSD):
        psd_factor([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NotPSD):
        psd_factor([[1.0, 0.5], [0.0, 1.0]])


@settings(max_examples=50)
@given(arrays(np.float64, (3, 3), elements=st.floats(-3, 3)))
def test_psd_factor_reconstructs(a):
    cov = a @ a.T
    L = psd_factor(cov)
    np.testing.assert_allclose(L @ L.T, cov, atol=1e-8)
    assert np.allclose(L, np.tril(L))


# ---- resampling


def test_point_mass():
    assert resample([1.0, 0, 0], 4, RngStream(0)).tolist() == [0, 0, 0, 0]


def test_systematic_uniform_is_exact():
    idx = resample(np.full(4, 0.25), 4, RngStream(3), "systematic")
    assert sorted(idx.tolist()) == [0, 1, 2, 3]


def test_multinomial_frequencies():
    w = np.array([0.5, 0.3, 0.2])
    idx = resample(w, 10**5, RngStream(2), "multinomial")
    np.testing.assert_allclose(np.bincount(idx, minlength=3) / 1e5, w, atol=0.01)


def test_resample_degenerate_weights_raise():
    with pytest.raises(AllWeightsDegenerate):
        resample([0.0, 0.0], 2, RngStream(0))


@pytest.mark.parametrize("scheme", ["systematic", "multinomial"])
def test_resampling_unbiased(scheme):
    w = np.array([0.05, 0.4, 0.15, 0.3, 0.1])
    n_out, reps = 7, 10**4
    s = RngStream(11, 1)
    counts = np.array([np.bincount(resample(w, n_out, s, scheme), minlength=5) for _ in range(reps)])
    se = counts.std(axis=0, ddof=1) / np.sqrt(reps)
    assert np.all(np.abs(counts.mean(axis=0) - n_out * w) < 3 * se + 1e-12)


@given(arrays(np.float64, st.integers(1, 12), elements=st.floats(0, 1)), st.integers(1, 40),
       st.sampled_from(["systematic", "multinomial"]), st.integers(0, 2**32))
def test_resample_indices_in_range(w, n_out, scheme, seed):
    if w.sum() == 0:
        w[0] = 1.0
    idx = resample(w, n_out, RngStream(seed), scheme)
    assert idx.shape == (n_out,) and idx.min() >= 0 and idx.max() < len(w)
    assert np.all(w[idx] > 0)


@given(arrays(np.float64, st.integers(1, 12), elements=st.floats(0.01, 1)), st.integers(1, 40), st.integers(0, 2**32))
def test_systematic_offspring_within_one(w, n_out, seed):
    w = w / w.sum()
    counts = np.bincount(resample(w, n_out, RngStream(seed)), minlength=len(w))
    assert np.all(np.abs(counts - n_out * w) < 1 + 1e-9)


def test_resample_rows_matches_per_row():
    w = np.array([[0.1, 0.9, 0.0], [1 / 3, 1 / 3, 1 / 3]])
    idx = resample_rows(w, 6, RngStream(4))
    assert idx.shape == (2, 6)
    assert 2 not in idx[0]


def test_categorical_rows_frequencies():
    lw = np.log([[0.2, 0.8], [0.7, 0.3]])
    draws = categorical_rows(lw, 50_000, RngStream(8))
    np.testing.assert_allclose((draws == 1).mean(axis=1), [0.8, 0.3], atol=0.01)
