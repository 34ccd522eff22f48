"""Stochastic state vectors under global phase noise and their covariance density matrices."""

__version__ = "0.1.0"

from .ensemble import (
    ComparisonReport,
    EnsembleAccumulator,
    InitialEnsemble,
    compare_to_oracle,
    estimate_density,
    estimate_mean,
    moment_rate_check,
    simulate_ensemble,
)
from .estimators import DensityMatrixEstimator, PhaseNoisePropagator
from .linalg import hermitian_eigen, matvec, unitary_propagator
from .models import BasisSet, ModelSpec, build_hamiltonian, momentum_operator, position_operator
from .noise import NoiseSampler
from .observables import ensemble_observable, quantum_average_density, quantum_average_state
from .propagator import SimulationParams, run_ensemble, run_trajectory, step_exact_phase, step_expanded
from .reference import (
    exact_covariance_recursion,
    exact_mean_recursion,
    liouville_evolve,
    schrodinger_evolve,
)

__all__ = [
    "BasisSet",
    "ComparisonReport",
    "DensityMatrixEstimator",
    "EnsembleAccumulator",
    "InitialEnsemble",
    "ModelSpec",
    "NoiseSampler",
    "PhaseNoisePropagator",
    "SimulationParams",
    "build_hamiltonian",
    "compare_to_oracle",
    "ensemble_observable",
    "estimate_density",
    "estimate_mean",
    "exact_covariance_recursion",
    "exact_mean_recursion",
    "hermitian_eigen",
    "liouville_evolve",
    "matvec",
    "moment_rate_check",
    "momentum_operator",
    "position_operator",
    "quantum_average_density",
    "quantum_average_state",
    "run_ensemble",
    "run_trajectory",
    "schrodinger_evolve",
    "simulate_ensemble",
    "step_exact_phase",
    "step_expanded",
    "unitary_propagator",
]
