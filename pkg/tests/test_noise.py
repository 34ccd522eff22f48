import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from stochwave.noise import NoiseSampler, initial_uniforms, phase_mean, raw_words, words_to_uniform


def _reference_stream(seed, trajectory, count, stream=0):
    # generator positioned at word 0 of the stream, read sequentially
    bg = np.random.Philox(key=np.array([seed, trajectory], dtype=np.uint64), counter=np.array([0, stream, 0, 0], dtype=np.uint64))
    return bg.random_raw(count)


def test_gaussian_draws_match_an_independent_reconstruction():
    words = _reference_stream(42, 3, 10)
    u = ((words >> np.uint64(12)).astype(float) + 0.5) / 2.0**52
    expected = np.sqrt(0.7) * stats.norm.ppf(u)
    got = NoiseSampler("gaussian", 0.7, 42).draws(3, 10)
    assert np.allclose(got, expected, rtol=1e-13, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(start=st.integers(0, 40), count=st.integers(0, 13), trajectory=st.integers(0, 2**40))
def test_random_access_matches_sequential_stream(start, count, trajectory):
    full = _reference_stream(5, trajectory, start + count)
    assert np.array_equal(raw_words(5, trajectory, start, count), full[start:])


def test_xi_at_single_step_equals_batch():
    s = NoiseSampler("gaussian", 1.0, 9)
    batch = s.draws(11, 20)
    assert all(s.xi(11, k) == batch[k] for k in range(20))
    blk = s.block([4, 11], 20)
    assert np.array_equal(blk[:, 1], batch)


def test_streams_are_distinct():
    s = NoiseSampler("gaussian", 1.0, 0)
    a, b = s.draws(0, 50), s.draws(1, 50)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, NoiseSampler("gaussian", 1.0, 1).draws(0, 50))
    init = words_to_uniform(raw_words(0, 0, 0, 1, stream=1))
    assert init[0] != words_to_uniform(raw_words(0, 0, 0, 1))[0]
    assert np.array_equal(initial_uniforms(0, [0, 1]), [initial_uniforms(0, [0])[0], initial_uniforms(0, [1])[0]])


def test_uniform_range():
    w = np.array([0, 2**64 - 1], dtype=np.uint64)
    u = words_to_uniform(w)
    assert 0 < u[0] < 1e-15 and 1 - 1e-15 < u[1] < 1


@pytest.mark.parametrize("dist", ["gaussian", "rademacher"])
def test_moments(dist):
    gamma = 0.7
    s = NoiseSampler(dist, gamma, 2024)
    x = np.concatenate([s.draws(t, 100_000) for t in range(10)])
    n = len(x)
    assert abs(x.mean()) <= 4 * np.sqrt(gamma / n)
    assert abs(x.var() / gamma - 1) <= 0.01
    if dist == "rademacher":
        assert np.allclose(np.abs(x), np.sqrt(gamma))


def test_gamma_zero_is_silent():
    assert np.array_equal(NoiseSampler("gaussian", 0.0, 1).draws(0, 10), np.zeros(10))


@pytest.mark.parametrize("gamma,tau", [(1.0, 1e-3), (2.0, 0.1), (0.3, 0.5)])
def test_phase_mean_against_quadrature(gamma, tau):
    gauss, _ = integrate.quad(lambda x: np.cos(np.sqrt(tau) * x) * stats.norm.pdf(x, scale=np.sqrt(gamma)), -np.inf, np.inf)
    assert phase_mean("gaussian", gamma, tau) == pytest.approx(gauss, rel=1e-10)
    assert phase_mean("rademacher", gamma, tau) == pytest.approx(np.cos(np.sqrt(gamma * tau)), rel=1e-15)


def test_invalid_sampler():
    with pytest.raises(ValueError):
        NoiseSampler("uniform")
    with pytest.raises(ValueError):
        NoiseSampler("gaussian", -1.0)
    with pytest.raises(ValueError):
        NoiseSampler("gaussian", 1.0, -3)
