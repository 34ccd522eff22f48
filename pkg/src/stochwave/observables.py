"""Quantum averages of Hermitian operators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_ensemble, check_same_dim, check_square, check_vector

IMAG_TOL = 1e-9


@dataclass(frozen=True)
class ObservableResult:
    """Average of an operator; the imaginary part is kept as a corruption detector."""

    value: complex
    standard_error: float = 0.0
    operator_name: str = ""

    @property
    def real(self):
        return self.value.real

    @property
    def imag_residue(self):
        return abs(self.value.imag)


def quantum_average_state(a, z, name=""):
    """``z^dagger A z``."""
    a = check_square(a)
    z = check_vector(z)
    check_same_dim(a, z, "operator and state")
    return ObservableResult(complex(np.vdot(z, a @ z)), 0.0, name)


def quantum_average_density(a, rho, name=""):
    """``trace(A rho) = sum_jk A_jk rho_kj``."""
    a = check_square(a)
    rho = check_square(rho)
    if a.shape != rho.shape:
        raise ValueError(f"operator {a.shape} and density matrix {rho.shape} differ in shape")
    return ObservableResult(complex(np.sum(a * rho.T)), 0.0, name)


def ensemble_observable(Z, a, name=""):
    """Mean of ``z^dagger A z`` over trajectories with its standard error."""
    Z = check_ensemble(Z, min_samples=2)
    a = check_square(a)
    check_same_dim(a, Z, "operator and states")
    vals = np.einsum("ij,jk,ik->i", Z.conj(), a, Z)
    n = len(vals)
    se = np.sqrt((np.var(vals.real, ddof=1) + np.var(vals.imag, ddof=1)) / n)
    return ObservableResult(complex(vals.mean()), float(se), name)
