"""Input validation helpers shared by the functional API and the estimators.

scikit-learn's ``check_array`` rejects complex input, so states, operators and
ensembles are validated here instead.
"""

from __future__ import annotations

import numpy as np

HERMITIAN_TOL = 1e-12
DENSITY_TOL = 1e-10
NORM_TOL = 1e-12


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class NotHermitianError(ValueError):
    """A matrix that must be Hermitian is not."""


def check_vector(v, name="vector"):
    arr = np.asarray(v, dtype=complex)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"{name} must be a non-empty 1-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_square(m, name="matrix"):
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_hermitian(m, tol=HERMITIAN_TOL, name="operator"):
    """Return ``m`` as a complex array after checking ``m == m^H``.

    The tolerance is relative to the largest entry magnitude.
    """
    arr = check_square(m, name)
    scale = float(np.max(np.abs(arr))) if arr.size else 0.0
    err = float(np.max(np.abs(arr - arr.conj().T)))
    if err > tol * scale:
        raise NotHermitianError(
            f"{name} is not Hermitian: max |A - A^H| = {err:.3e} (scale {scale:.3e})"
        )
    return arr


def check_state(z, tol=NORM_TOL, name="state"):
    """Validate a normalized state vector."""
    arr = check_vector(z, name)
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"{name} must be normalized within {tol:g}, got norm {norm!r}")
    return arr


def check_density(rho, tol=DENSITY_TOL, name="density matrix"):
    """Validate Hermiticity, unit trace and positive semidefiniteness."""
    arr = check_square(rho, name)
    if np.max(np.abs(arr - arr.conj().T)) > tol:
        raise NotHermitianError(f"{name} is not Hermitian within {tol:g}")
    tr = np.trace(arr)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"{name} must have unit trace within {tol:g}, got {tr!r}")
    lam_min = float(np.linalg.eigvalsh(0.5 * (arr + arr.conj().T))[0])
    if lam_min < -tol:
        raise ValueError(f"{name} is not positive semidefinite (min eigenvalue {lam_min:.3e})")
    return arr


def check_ensemble(Z, n_features=None, min_samples=1, name="ensemble"):
    """Validate an ``(n_samples, n)`` array of states, one trajectory per row."""
    arr = np.asarray(Z, dtype=complex)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] == 0:
        raise DimensionError(f"{name} must be 2-d (n_samples, n), got shape {arr.shape}")
    if arr.shape[0] < min_samples:
        raise ValueError(f"{name} needs at least {min_samples} samples, got {arr.shape[0]}")
    if n_features is not None and arr.shape[1] != n_features:
        raise DimensionError(f"{name} has {arr.shape[1]} components, expected {n_features}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_same_dim(a, b, what="operands"):
    if a.shape[-1] != b.shape[-1]:
        raise DimensionError(f"dimension mismatch between {what}: {a.shape} vs {b.shape}")
