import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nestedpf.dpf import (
    DpfState,
    ZeroRWeights,
    dpf_estimate,
    dpf_init,
    dpf_step,
    likelihood_marginal,
    transition_marginal_gaussian,
    transition_marginal_mc,
)
from nestedpf.kalman import kalman_filter
from nestedpf.models import NotAdditiveGaussian, model1, model2, simulate_trajectory
from nestedpf.randomness import Degenerate, RngStream

from _support import DeadLikelihood, FlatLikelihood, lg_model, run


def npdf(x, mu, var):
    return math.exp(-0.5 * (x - mu) ** 2 / var) / math.sqrt(2 * math.pi * var)


def ref_transition_marginal(t, xc, xp, zs, q):
    # model1 x-transition by hand: N(xc; xp + z/(1+z^2), 1)
    return sum(qj * npdf(xc, xp + z / (1 + z * z), 1.0) for z, qj in zip(zs, q))


def ref_likelihood_marginal(t, y, x, zs, r):
    # model1 observation by hand: N(y; atan(x) + z^2/20, 1)
    return sum(rj * npdf(y, math.atan(x) + z * z / 20, 1.0) for z, rj in zip(zs, r)) / sum(r)


# ---- transition marginal


def test_mc_single_component():
    m = model1()
    got = transition_marginal_mc(m, 0, [0.3], [0.1], [[0.7]], [1.0])
    assert got == pytest.approx(m.x_transition_density(0, np.array([0.3]), np.array([0.1]), np.array([0.7])), rel=1e-15)


def test_mc_identical_components():
    m = model1()
    got = transition_marginal_mc(m, 0, [0.3], [0.1], [[0.7]] * 4, np.full(4, 0.25))
    assert got == pytest.approx(transition_marginal_mc(m, 0, [0.3], [0.1], [[0.7]], [1.0]), rel=1e-14)


@settings(max_examples=50)
@given(st.lists(st.floats(-4, 4), min_size=3, max_size=3), st.lists(st.floats(0.01, 1), min_size=3, max_size=3),
       st.floats(-4, 4), st.floats(-4, 4))
def test_mc_matches_reference(zs, q, xc, xp):
    q = np.array(q) / sum(q)
    got = transition_marginal_mc(model1(), 2, [xc], [xp], np.array(zs)[:, None], q)
    assert got == pytest.approx(ref_transition_marginal(2, xc, xp, zs, q), rel=1e-13, abs=1e-300)


def test_gaussian_equals_mc_for_identical_means():
    m = model1()
    a = transition_marginal_gaussian(m, 0, [0.3], [0.1], [[0.7]] * 3, np.full(3, 1 / 3))
    b = transition_marginal_mc(m, 0, [0.3], [0.1], [[0.7]] * 3, np.full(3, 1 / 3))
    assert a == pytest.approx(b, rel=1e-14)


def test_gaussian_two_component_moment_match():
    # x' = x + z + v, var(v) = 1; components z = +-1 at x = 0 give means +-1
    m = lg_model(A=[[1.0, 1.0], [0.0, 1.0]], Q=np.eye(2))
    for xc in (-1.3, 0.0, 0.4, 2.0):
        got = transition_marginal_gaussian(m, 0, [xc], [0.0], [[1.0], [-1.0]], [0.5, 0.5])
        assert got == pytest.approx(npdf(xc, 0.0, 2.0), rel=1e-13)


def test_gaussian_needs_additive_noise():
    from test_models import _Opaque
    with pytest.raises(NotAdditiveGaussian):
        transition_marginal_gaussian(_Opaque(), 0, [0.0], [0.0], [[0.0]], [1.0])


# ---- likelihood marginal


def test_likelihood_equal_r_is_plain_average():
    m = model1()
    zs = np.array([[0.1], [1.5], [-2.0]])
    lik = m.observation_density(0, np.array([0.4]), np.array([0.2]), zs)
    assert likelihood_marginal(m, 0, [0.4], [0.2], zs, [2.0, 2.0, 2.0]) == pytest.approx(lik.mean(), rel=1e-14)


def test_likelihood_single_particle():
    m = model1()
    assert likelihood_marginal(m, 0, [0.4], [0.2], [[1.0]], [0.3]) == pytest.approx(
        m.observation_density(0, np.array([0.4]), np.array([0.2]), np.array([1.0])), rel=1e-14)


@settings(max_examples=50)
@given(st.lists(st.floats(-6, 6), min_size=4, max_size=4), st.lists(st.floats(0.01, 5), min_size=4, max_size=4),
       st.floats(-3, 3), st.floats(-3, 3))
def test_likelihood_matches_reference(zs, r, y, x):
    got = likelihood_marginal(model1(), 0, [y], [x], np.array(zs)[:, None], r)
    assert got == pytest.approx(ref_likelihood_marginal(0, y, x, zs, r), rel=1e-13, abs=1e-300)


def test_likelihood_zero_r():
    with pytest.raises(ZeroRWeights):
        likelihood_marginal(model1(), 0, [0.0], [0.0], [[0.0]], [0.0])


# ---- steps


def test_flat_likelihood_uniform_weights_and_qbar():
    s = dpf_init(FlatLikelihood(), 8, 5, RngStream(1))
    for y in ([0.3], [1.0]):
        s = dpf_step(s, y)
        np.testing.assert_allclose(s.weights, 1 / 8, rtol=1e-12)
        np.testing.assert_allclose(np.exp(s.log_q_bar), 1 / 5, rtol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 12), st.integers(1, 8), st.integers(0, 2**31), st.sampled_from(["monte_carlo", "gaussian"]))
def test_step_invariants(n_x, n_z, seed, mode):
    s = dpf_init(model1(), n_x, n_z, RngStream(seed), marginal_mode=mode)
    for k, y in enumerate(RngStream(seed, 1).standard_normal((4, 1)) * 3):
        s = dpf_step(s, y)
        assert np.array_equal(s.log_r_prop, np.zeros((n_x, n_z)))  # r_tilde == 1 exactly
        assert abs(s.weights.sum() - 1) < 1e-12
        np.testing.assert_allclose(np.exp(s.log_q_bar).sum(axis=1), 1, atol=1e-12)
        assert s.z_cloud.shape == (n_x, n_z, 1) and s.z_prop.shape == (n_x, n_z, 1)
        assert s.likelihood_evals == (k + 1) * n_x * n_z
        assert np.all(np.isfinite(s.marginals.log_lik_marg))


def test_model2_shapes():
    s = dpf_init(model2(), 6, 4, RngStream(0))
    s = dpf_step(dpf_step(s, [0.5]), [1.0])
    assert dpf_estimate(s).shape == (4,) and s.z_cloud.shape == (6, 4, 2)


def test_degenerate_outer_weights():
    with pytest.raises(Degenerate):
        dpf_step(dpf_init(DeadLikelihood(), 4, 3, RngStream(0)), [0.0])


def test_paths_are_kept_on_request():
    s = dpf_init(model1(), 5, 3, RngStream(2), keep_paths=True)
    for y in ([0.1], [0.2], [0.3]):
        s = dpf_step(s, y)
    assert s.x_paths.shape == (5, 3, 1)


def test_estimate_single_particle_and_symmetric():
    m = model1()
    one = DpfState(m, RngStream(0), 1, 1, None, None, None, x=np.array([[2.0]]), z_cloud=np.array([[[3.0]]]),
                   weights=np.array([1.0]), log_q_bar=np.zeros((1, 1)))
    assert np.array_equal(dpf_estimate(one), [2.0, 3.0])
    sym = DpfState(m, RngStream(0), 2, 2, None, None, None, x=np.array([[1.5], [-1.5]]),
                   z_cloud=np.array([[[0.7], [-0.7]], [[2.0], [-2.0]]]), weights=np.array([0.5, 0.5]),
                   log_q_bar=np.log(np.full((2, 2), 0.5)))
    assert np.array_equal(dpf_estimate(sym), [0.0, 0.0])


def _kalman_errors(n_x, n_z, seeds, T=20, mode="monte_carlo"):
    m = lg_model()
    out = []
    for seed in seeds:
        tr = simulate_trajectory(m, T, RngStream(seed, 0))
        km, _ = kalman_filter(m, tr.ys)
        _, est = run(dpf_step, dpf_init(m, n_x, n_z, RngStream(seed, 1), mode), tr.ys, dpf_estimate)
        out.append(np.abs(est - km).mean(axis=0))
    return np.mean(out, axis=0)


def test_matches_kalman():
    assert _kalman_errors(200, 20, range(50)).max() < 0.1


def test_gaussian_mode_matches_kalman():
    assert _kalman_errors(200, 20, range(20), mode="gaussian").max() < 0.1


def test_error_decreases_with_outer_particles():
    errs = [_kalman_errors(n, 20, range(20)).mean() for n in (50, 200, 800)]
    assert errs[0] > errs[1] > errs[2]
