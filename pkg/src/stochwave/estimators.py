"""scikit-learn compatible wrappers.

``PhaseNoisePropagator`` is a transformer that maps an ensemble of initial
states (one row per trajectory) to the evolved states, and
``DensityMatrixEstimator`` fits the covariance density matrix of an ensemble.
Both accept complex arrays, which scikit-learn's own validators refuse.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .ensemble import EnsembleAccumulator, compare_to_oracle
from .noise import NoiseSampler
from .propagator import SimulationParams, run_ensemble
from .validation import check_ensemble, check_hermitian


class PhaseNoisePropagator(TransformerMixin, BaseEstimator):
    """Evolve each row under the phase-noise map.

    Parameters
    ----------
    hamiltonian : array of shape (n, n)
        Hermitian matrix.
    tau, gamma, planck_h, t_max, scheme, renormalize, noise_dist
        See :class:`stochwave.propagator.SimulationParams`.
    seed : int
        Master seed of the counter-based noise streams.
    trajectory_offset : int
        Row ``i`` uses trajectory stream ``trajectory_offset + i``.

    Attributes
    ----------
    hamiltonian_ : ndarray
    params_ : SimulationParams
    n_features_in_ : int
    norm_drift_ : ndarray of shape (n_samples,)
        Per-row norm drift of the most recent :meth:`transform`.
    """

    def __init__(
        self,
        hamiltonian=None,
        tau=1e-3,
        gamma=1.0,
        planck_h=1.0,
        t_max=1.0,
        scheme="exact-phase",
        renormalize=False,
        noise_dist="gaussian",
        seed=0,
        trajectory_offset=0,
    ):
        self.hamiltonian = hamiltonian
        self.tau = tau
        self.gamma = gamma
        self.planck_h = planck_h
        self.t_max = t_max
        self.scheme = scheme
        self.renormalize = renormalize
        self.noise_dist = noise_dist
        self.seed = seed
        self.trajectory_offset = trajectory_offset

    def fit(self, X=None, y=None):
        if self.hamiltonian is None:
            raise ValueError("hamiltonian must be set before fitting")
        self.hamiltonian_ = check_hermitian(self.hamiltonian, name="hamiltonian")
        self.params_ = SimulationParams(
            tau=self.tau,
            gamma=self.gamma,
            planck_h=self.planck_h,
            t_max=self.t_max,
            scheme=self.scheme,
            renormalize=self.renormalize,
            noise_dist=self.noise_dist,
            record_stride=max(1, int(round(self.t_max / self.tau))),
        )
        self.n_features_in_ = self.hamiltonian_.shape[0]
        if X is not None:
            check_ensemble(X, n_features=self.n_features_in_)
        return self

    def transform(self, X):
        check_is_fitted(self, "hamiltonian_")
        Z = check_ensemble(X, n_features=self.n_features_in_)
        sampler = NoiseSampler(self.noise_dist, self.gamma, self.seed)
        idx = self.trajectory_offset + np.arange(Z.shape[0])
        run = run_ensemble(Z, self.hamiltonian_, self.params_, sampler, idx)
        self.norm_drift_ = run.norm_drift
        return run.final_states


class DensityMatrixEstimator(BaseEstimator):
    """Uncentred second moment ``<z z^dagger>`` of an ensemble, with standard errors.

    Attributes
    ----------
    density_ : ndarray of shape (n, n)
    density_se_ : ndarray of shape (n, n)
    mean_ : ndarray of shape (n,)
    mean_se_ : ndarray of shape (n,)
    trace_ : float
    n_samples_ : int
    """

    def __init__(self, k_sigma=4.0):
        self.k_sigma = k_sigma

    def fit(self, X, y=None):
        Z = check_ensemble(X, min_samples=2)
        acc = EnsembleAccumulator(Z.shape[1]).accumulate(Z)
        self.accumulator_ = acc
        self.density_ = acc.density()
        self.density_se_ = acc.density_standard_error()
        self.mean_ = acc.mean()
        self.mean_se_ = acc.mean_standard_error()
        self.trace_ = float(np.trace(self.density_).real)
        self.n_samples_ = acc.count
        self.n_features_in_ = Z.shape[1]
        return self

    def partial_fit(self, X, y=None):
        """Add more trajectories to an existing fit."""
        Z = check_ensemble(X)
        if not hasattr(self, "accumulator_"):
            self.accumulator_ = EnsembleAccumulator(Z.shape[1])
        self.accumulator_.accumulate(Z)
        acc = self.accumulator_
        self.n_samples_ = acc.count
        self.n_features_in_ = acc.dim
        if acc.count >= 2:
            self.density_ = acc.density()
            self.density_se_ = acc.density_standard_error()
            self.mean_ = acc.mean()
            self.mean_se_ = acc.mean_standard_error()
            self.trace_ = float(np.trace(self.density_).real)
        return self

    def compare(self, rho_ref, tau=0.0, c_bias=1.0):
        check_is_fitted(self, "density_")
        return compare_to_oracle(self.density_, rho_ref, self.density_se_, tau=tau, k=self.k_sigma, c_bias=c_bias)

    def score(self, X, y=None):
        """Negative Frobenius distance between the fitted density and that of ``X``."""
        check_is_fitted(self, "density_")
        other = EnsembleAccumulator(self.n_features_in_).accumulate(check_ensemble(X, min_samples=2))
        return -float(np.linalg.norm(other.density() - self.density_))
