"""Small dense complex linear algebra.

Operator application sums over columns in a fixed order so a single vector and
a row of a batch produce bit-identical results; the ensemble engine relies on
this for reproducibility across block sizes.
"""

from __future__ import annotations

import numpy as np

from .validation import DimensionError, check_hermitian, check_square, check_vector


def apply_operator(m, Z):
    """Apply ``m`` to every row of ``Z``: ``out[i, j] = sum_k m[j, k] Z[i, k]``."""
    Z = np.asarray(Z, dtype=complex)
    if Z.shape[-1] != m.shape[1]:
        raise DimensionError(f"matrix is {m.shape}, vectors have {Z.shape[-1]} components")
    out = Z[..., 0:1] * m[:, 0]
    for k in range(1, m.shape[1]):
        out = out + Z[..., k : k + 1] * m[:, k]
    return out


def matvec(m, v):
    m = check_square(m)
    v = check_vector(v)
    return apply_operator(m, v[None, :])[0]


def hermitian_eigen(h):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    h = check_hermitian(h)
    lam, vecs = np.linalg.eigh(h)
    return lam, vecs


def unitary_propagator(h, t, planck_h=1.0):
    """``exp(-i H t / planck_h)`` built from the spectral decomposition."""
    if planck_h <= 0:
        raise ValueError("planck_h must be positive")
    lam, vecs = hermitian_eigen(h)
    phases = np.exp(-1j * lam * (t / planck_h))
    return (vecs * phases) @ vecs.conj().T
