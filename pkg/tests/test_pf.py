import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nestedpf.kalman import kalman_filter
from nestedpf.models import model1, simulate_trajectory
from nestedpf.pf import PfState, pf_estimate, pf_init, pf_step
from nestedpf.randomness import Degenerate, RngStream

from _support import DeadLikelihood, FlatLikelihood, lg_model, run


def test_init_single_particle():
    s = pf_init(model1(), 1, RngStream(0))
    assert s.particles.shape == (1, 2) and s.weights.tolist() == [1.0]


def test_init_prior_moments():
    s = pf_init(model1(), 10**5, RngStream(1))
    assert np.abs(s.particles.mean(axis=0)).max() < 0.02


def test_init_deterministic():
    a, b = pf_init(model1(), 50, RngStream(2, 7)), pf_init(model1(), 50, RngStream(2, 7))
    assert np.array_equal(a.particles, b.particles)


def test_init_rejects_empty():
    with pytest.raises(ValueError):
        pf_init(model1(), 0, RngStream(0))


def test_flat_likelihood_gives_uniform_weights():
    s = pf_init(FlatLikelihood(), 64, RngStream(3))
    for y in ([0.1], [2.0], [-1.0]):
        s = pf_step(s, y)
        np.testing.assert_allclose(s.weights, 1 / 64, rtol=1e-12)


def test_flat_likelihood_resampling_is_uniform_over_ancestors():
    # with uniform weights systematic resampling keeps every particle exactly once
    s = pf_init(FlatLikelihood(), 16, RngStream(3))
    s = pf_step(s, [0.0])
    base = s.particles.copy()
    s.model = FlatLikelihood(process_cov=np.zeros((2, 2)))
    nxt = pf_step(s, [0.0])
    expect = np.concatenate([s.model.f_x(0, base[:, :1], base[:, 1:]), s.model.f_z(0, base[:, :1], base[:, 1:])], 1)
    assert sorted(map(tuple, np.round(nxt.particles, 12))) == sorted(map(tuple, np.round(expect, 12)))


def test_single_particle_follows_one_path():
    s = pf_init(model1(), 1, RngStream(4))
    for y in np.random.default_rng(0).normal(size=(10, 1)):
        s = pf_step(s, y)
        assert s.weights.tolist() == [1.0]


def test_degenerate_likelihood_raises():
    s = pf_init(DeadLikelihood(), 10, RngStream(0))
    with pytest.raises(Degenerate) as info:
        pf_step(s, [0.0])
    assert info.value.t == 0


def test_estimates_point_mass_and_symmetric():
    m = model1()
    p = np.array([[1.0, 2.0], [-3.0, 5.0]])
    assert np.array_equal(pf_estimate(PfState(m, p, np.array([0.0, 1.0]), RngStream(0))), [-3.0, 5.0])
    sym = PfState(m, np.array([[-1.0, 1.0], [1.0, -1.0]]), np.array([0.5, 0.5]), RngStream(0))
    assert np.array_equal(pf_estimate(sym), [0.0, 0.0])


def test_large_n_matches_kalman():
    m = lg_model()
    tr = simulate_trajectory(m, 20, RngStream(5))
    km, _ = kalman_filter(m, tr.ys)
    _, est = run(pf_step, pf_init(m, 10**5, RngStream(6)), tr.ys, pf_estimate)
    assert np.abs(est - km).max() < 0.05


def test_error_halves_from_1e2_to_1e4():
    m = lg_model()
    err = {100: [], 10**4: []}
    for seed in range(50):
        tr = simulate_trajectory(m, 20, RngStream(seed, 0))
        km, _ = kalman_filter(m, tr.ys)
        for n in err:
            _, est = run(pf_step, pf_init(m, n, RngStream(seed, 1)), tr.ys, pf_estimate)
            err[n].append(np.sqrt(np.mean((est - km) ** 2)))
    assert np.mean(err[10**4]) < 0.5 * np.mean(err[100])


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**31), st.sampled_from(["systematic", "multinomial"]))
def test_weights_normalized_shape_constant(n, seed, scheme):
    s = pf_init(model1(), n, RngStream(seed), scheme)
    for y in RngStream(seed, 1).standard_normal((5, 1)) * 3:
        s = pf_step(s, y)
        assert s.particles.shape == (n, 2)
        assert abs(s.weights.sum() - 1) < 1e-12 and np.all(s.weights >= 0)
    assert s.likelihood_evals == 5 * n
