import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochwave.ensemble import (
    EnsembleAccumulator,
    InitialEnsemble,
    bilinear,
    compare_to_oracle,
    estimate_density,
    estimate_mean,
    moment_rate_check,
    simulate_ensemble,
)
from stochwave.noise import NoiseSampler
from stochwave.propagator import SimulationParams, euler_path, run_ensemble, step_exact_phase

from conftest import SIGMA_X, random_hermitian, random_state


def test_accumulator_examples():
    acc = EnsembleAccumulator(2).accumulate(np.array([[1, 0], [0, 1]], dtype=complex))
    assert np.allclose(acc.density(), np.eye(2) / 2)
    assert np.allclose(acc.mean(), [0.5, 0.5])
    assert acc.count == 2
    same = EnsembleAccumulator(2).accumulate(np.tile([0.6, 0.8j], (5, 1)))
    rho, se = estimate_density(same)
    assert np.allclose(rho, np.outer([0.6, 0.8j], np.conj([0.6, 0.8j])))
    assert np.array_equal(se, np.zeros((2, 2)))
    assert np.array_equal(estimate_mean(same)[1], np.zeros(2))
    with pytest.raises(ValueError):
        EnsembleAccumulator(2).accumulate([1, 0]).density()


def test_standard_error_matches_numpy(rng):
    Z = rng.normal(size=(300, 3)) + 1j * rng.normal(size=(300, 3))
    acc = EnsembleAccumulator(3).accumulate(Z)
    outer = Z[:, :, None] * Z[:, None, :].conj()
    ref = np.sqrt((outer.real.var(axis=0, ddof=1) + outer.imag.var(axis=0, ddof=1)) / 300)
    assert np.allclose(acc.density_standard_error(), ref, rtol=1e-10)
    ref_mean = np.sqrt((Z.real.var(axis=0, ddof=1) + Z.imag.var(axis=0, ddof=1)) / 300)
    assert np.allclose(acc.mean_standard_error(), ref_mean, rtol=1e-10)
    assert np.allclose(acc.sum_sq_diag, (np.abs(Z) ** 4).sum(axis=0), rtol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), cut=st.integers(1, 199))
def test_order_and_merge_invariance(seed, cut):
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(200, 3)) + 1j * rng.normal(size=(200, 3))
    whole = EnsembleAccumulator(3).accumulate(Z)
    perm = EnsembleAccumulator(3)
    for row in Z[rng.permutation(200)]:
        perm.accumulate(row)
    merged = EnsembleAccumulator(3).accumulate(Z[:cut]).merge(EnsembleAccumulator(3).accumulate(Z[cut:]))
    for other in (perm, merged):
        assert np.abs(other.density() - whole.density()).max() <= 1e-12
        assert np.abs(other.density_standard_error() - whole.density_standard_error()).max() <= 1e-12
        assert np.abs(other.mean() - whole.mean()).max() <= 1e-12


def test_outer_products_are_exactly_hermitian(rng):
    Z = np.array([random_state(4, rng) for _ in range(50)])
    acc = EnsembleAccumulator(4).accumulate(Z)
    s = acc.sum_outer
    assert np.array_equal(s, s.conj().T)
    assert np.all(s.diagonal().imag == 0)


def test_tracked_observables(rng):
    a = random_hermitian(3, rng)
    Z = np.array([random_state(3, rng) for _ in range(40)])
    acc = EnsembleAccumulator(3, {"a": a}).accumulate(Z)
    vals = np.einsum("ij,jk,ik->i", Z.conj(), a, Z)
    value, se = acc.observable("a")
    assert value == pytest.approx(vals.mean(), abs=1e-13)
    assert se == pytest.approx(np.sqrt(vals.real.var(ddof=1) / 40), rel=1e-9, abs=1e-15)
    single = EnsembleAccumulator(3, {"a": a}).accumulate(Z[0])
    assert np.isnan(single.observable("a")[1])
    with pytest.raises(ValueError):
        acc.merge(EnsembleAccumulator(3))


def test_initial_ensembles():
    with pytest.raises(ValueError):
        InitialEnsemble("basis-mixture", weights=np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        InitialEnsemble("deterministic", base_state=np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        InitialEnsemble("coherent", base_state=np.array([1.0, 0.0]))
    mix = InitialEnsemble("basis-mixture", weights=np.array([0.3, 0.7, 0.0]))
    assert np.array_equal(mix.density(), np.diag([0.3, 0.7, 0.0]))
    Z = mix.sample(np.arange(20000), seed=3)
    assert np.all(Z[:, 2] == 0)
    frac = np.abs(Z[:, 0]).mean()
    assert abs(frac - 0.3) <= 4 * np.sqrt(0.21 / 20000)
    assert np.array_equal(mix.sample([7, 8], seed=3), Z[7:9])


def test_mixture_without_dynamics_estimates_weights():
    n = 10000
    init = InitialEnsemble("basis-mixture", weights=np.array([0.3, 0.7]))
    p = SimulationParams(tau=1e-2, gamma=1.0, t_max=0.1)
    res = simulate_ensemble(init, np.zeros((2, 2)), p, n, seed=1)
    rho, se = estimate_density(res.final)
    assert np.all(np.abs(rho - np.diag([0.3, 0.7])) <= 4 * np.sqrt(0.21 / n) + 1e-15)
    assert abs(rho[0, 1]) <= 1e-15


def test_strong_noise_destroys_the_mean():
    p = SimulationParams(tau=1e-2, gamma=50.0, t_max=1.0)
    res = simulate_ensemble(InitialEnsemble("deterministic", base_state=np.array([1.0, 0.0])), SIGMA_X, p, 2000, seed=0)
    mean, se = estimate_mean(res.final)
    assert np.all(np.abs(mean) <= 5 * se)


def test_noise_free_ensemble_is_the_euler_path():
    p = SimulationParams(tau=1e-3, gamma=0.0, t_max=1.0)
    z0 = np.array([1.0, 0.0])
    res = simulate_ensemble(InitialEnsemble("deterministic", base_state=z0), SIGMA_X, p, 3, seed=0)
    psi = euler_path(z0, SIGMA_X, p)[-1]
    assert np.array_equal(res.final.mean(), psi)
    assert np.abs(res.final.density() - np.outer(psi, psi.conj())).max() <= 1e-15


def test_thread_count_does_not_change_results(rng):
    h = random_hermitian(3, rng)
    init = InitialEnsemble("basis-mixture", weights=np.array([0.2, 0.3, 0.5]))
    p = SimulationParams(tau=1e-2, gamma=1.0, t_max=1.0, record_stride=20)
    runs = [simulate_ensemble(init, h, p, 1000, seed=5, threads=t, time_resolved=True, block_size=128) for t in (1, 3)]
    for a, b in zip(runs[0].accumulators, runs[1].accumulators):
        assert np.array_equal(a.density(), b.density())
        assert np.array_equal(a.density_standard_error(), b.density_standard_error())
    assert runs[0].norm_drift == runs[1].norm_drift


def test_standard_error_scales_with_sample_size():
    p = SimulationParams(tau=1e-2, gamma=1.0, t_max=0.5)
    init = InitialEnsemble("basis-mixture", weights=np.array([0.5, 0.5]))
    se = [simulate_ensemble(init, SIGMA_X, p, n, seed=2).final.density_standard_error().max() for n in (2000, 8000)]
    assert se[0] / se[1] == pytest.approx(2.0, rel=0.15)


def _evolved(h, gamma, n, seed=0):
    p = SimulationParams(tau=1e-2, gamma=gamma, t_max=0.5)
    Z0 = np.tile(random_state(h.shape[0], np.random.default_rng(seed)), (n, 1))
    return run_ensemble(Z0, h, p, NoiseSampler("gaussian", gamma, seed)).final_states


def test_moment_rhs_is_the_liouville_rate_of_the_sample(rng):
    h = random_hermitian(3, rng)
    Z = _evolved(h, 1.0, 500)
    p = SimulationParams(tau=1e-4, gamma=1.0, t_max=1e-4)
    rho = EnsembleAccumulator(3).accumulate(Z).raw_density()
    rate = (h @ rho - rho @ h) / 1j
    Fs = [np.eye(3), np.diag([1.0, 0, 0]), rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))]
    for F in Fs:
        check = moment_rate_check(Z, Z, F, h, p)
        assert check.rhs == pytest.approx(np.sum(F * rate), abs=1e-12)
        assert abs(check.damping_term + check.diffusion_term) <= 1e-12
    assert abs(moment_rate_check(Z, Z, np.eye(3), h, p).rhs) <= 1e-12


def test_moment_rhs_is_gamma_independent(rng):
    h = random_hermitian(2, rng)
    Z = _evolved(h, 0.5, 200)
    F = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rhs = [moment_rate_check(Z, Z, F, h, SimulationParams(tau=1e-3, gamma=g, t_max=1.0)).rhs for g in (0.0, 0.5, 2.0)]
    assert max(abs(r - rhs[0]) for r in rhs) <= 1e-12


def test_moment_check_one_step_agreement(rng):
    h = random_hermitian(3, rng)
    Z = _evolved(h, 1.0, 4000, seed=3)
    p = SimulationParams(tau=1e-5, gamma=1.0, t_max=1e-5)
    xi = NoiseSampler("gaussian", 1.0, 99).block(np.arange(len(Z)), 1)[0]
    Z_next = step_exact_phase(Z, h, p, xi)
    for F in (np.eye(3), np.diag([0, 1.0, 0]), rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))):
        assert moment_rate_check(Z, Z_next, F, h, p).within(4.0)


def test_moment_check_needs_pairs(rng):
    Z = np.array([random_state(2, rng) for _ in range(10)])
    p = SimulationParams(tau=1e-3, gamma=1.0, t_max=1.0)
    with pytest.raises(ValueError, match="paired"):
        moment_rate_check(Z, Z[:5], np.eye(2), SIGMA_X, p)
    with pytest.raises(ValueError, match="paired"):
        moment_rate_check(Z, Z, np.eye(2), SIGMA_X, p, trajectories_t=np.arange(10), trajectories_next=np.arange(1, 11))


def test_bilinear():
    Z = np.array([[1, 1j]]) / np.sqrt(2)
    assert bilinear(np.array([[0, 1], [0, 0]]), Z)[0] == pytest.approx(-0.5j)


def test_compare_to_oracle_examples():
    rho = np.diag([1.0, 0.0])
    rep = compare_to_oracle(rho, rho)
    assert rep.frobenius_error == 0 and rep.pass_
    rep = compare_to_oracle(np.eye(2) / 2, rho)
    assert rep.frobenius_error == pytest.approx(np.sqrt(0.5))
    assert rep.max_element_error == pytest.approx(0.5)
    assert not rep.pass_
    assert compare_to_oracle(np.eye(2) / 2, rho, np.full((2, 2), 0.13)).pass_
    assert compare_to_oracle(np.eye(2) / 2, rho, tau=0.5).pass_
    assert not compare_to_oracle(np.eye(2) / 2, rho, tau=0.5, c_bias=0.9).pass_
    assert set(rep.as_dict()) >= {"frobenius_error", "max_element_error", "trace_error", "pass"}
