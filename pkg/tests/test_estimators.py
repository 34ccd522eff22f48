import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import Pipeline

from stochwave.ensemble import EnsembleAccumulator
from stochwave.estimators import DensityMatrixEstimator, PhaseNoisePropagator
from stochwave.noise import NoiseSampler
from stochwave.propagator import SimulationParams, run_ensemble

from conftest import SIGMA_X


def _initial(n):
    return np.tile(np.array([1.0 + 0j, 0.0]), (n, 1))


def test_params_round_trip_and_clone():
    est = PhaseNoisePropagator(hamiltonian=SIGMA_X, tau=1e-2, gamma=0.5, seed=7)
    params = est.get_params()
    assert params["tau"] == 1e-2 and params["gamma"] == 0.5 and params["seed"] == 7
    twin = clone(est)
    assert twin.get_params()["seed"] == 7 and twin is not est
    est.set_params(gamma=2.0)
    assert est.gamma == 2.0
    assert DensityMatrixEstimator(k_sigma=3.0).get_params() == {"k_sigma": 3.0}


def test_transform_matches_engine():
    X = _initial(20)
    est = PhaseNoisePropagator(hamiltonian=SIGMA_X, tau=1e-2, gamma=1.0, t_max=1.0, seed=4, trajectory_offset=100)
    out = est.fit(X).transform(X)
    p = SimulationParams(tau=1e-2, gamma=1.0, t_max=1.0)
    ref = run_ensemble(X, SIGMA_X, p, NoiseSampler("gaussian", 1.0, 4), trajectories=np.arange(100, 120))
    assert np.array_equal(out, ref.final_states)
    assert np.array_equal(est.norm_drift_, ref.norm_drift)
    assert est.n_features_in_ == 2


def test_validation_errors():
    with pytest.raises(NotFittedError):
        PhaseNoisePropagator(hamiltonian=SIGMA_X).transform(_initial(2))
    with pytest.raises(ValueError):
        PhaseNoisePropagator().fit(_initial(2))
    est = PhaseNoisePropagator(hamiltonian=SIGMA_X).fit()
    with pytest.raises(ValueError):
        est.transform(np.ones((2, 3)))
    with pytest.raises(ValueError):
        PhaseNoisePropagator(hamiltonian=np.array([[0, 1], [0, 0]])).fit()
    with pytest.raises(ValueError):
        DensityMatrixEstimator().fit(_initial(1))


def test_density_estimator_and_pipeline():
    X = _initial(300)
    pipe = Pipeline([("evolve", PhaseNoisePropagator(hamiltonian=SIGMA_X, tau=1e-2, seed=1)), ("density", DensityMatrixEstimator())])
    pipe.fit(X)
    prop = PhaseNoisePropagator(hamiltonian=SIGMA_X, tau=1e-2, seed=1).fit(X)
    Z = prop.transform(X)
    acc = EnsembleAccumulator(2).accumulate(Z)
    dens = pipe.named_steps["density"]
    assert np.array_equal(dens.density_, acc.density())
    assert np.array_equal(dens.density_se_, acc.density_standard_error())
    assert dens.n_samples_ == 300 and dens.trace_ == pytest.approx(np.trace(acc.density()).real)
    assert dens.score(Z) == 0.0
    assert dens.compare(dens.density_).pass_


def test_partial_fit_equals_fit():
    X = PhaseNoisePropagator(hamiltonian=SIGMA_X, tau=1e-2, seed=2).fit().transform(_initial(100))
    whole = DensityMatrixEstimator().fit(X)
    parts = DensityMatrixEstimator()
    for chunk in np.array_split(X, 4):
        parts.partial_fit(chunk)
    assert np.abs(parts.density_ - whole.density_).max() <= 1e-14
    assert parts.n_samples_ == 100
