"""Underlying classical system of a finite-dimensional Hamiltonian.

With ``z = alpha q + i beta p`` and ``2 alpha beta = 1 / h`` the function
``z^dagger H z`` becomes the real quadratic form

    alpha^2 q.A.q + beta^2 p.A.p - 2 alpha beta q.B.p,    H = A + i B,

whose Hamilton equations reproduce the Schrödinger equation for ``z``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .validation import DimensionError, check_hermitian


@dataclass(frozen=True)
class CanonicalState:
    q: np.ndarray
    p: np.ndarray
    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        if np.shape(self.q) != np.shape(self.p) or np.ndim(self.q) != 1:
            raise DimensionError("q and p must be 1-d arrays of equal length")

    @property
    def planck_h(self):
        return 1.0 / (2 * self.alpha * self.beta)


def default_alpha(planck_h=1.0):
    return 1.0 / np.sqrt(2 * planck_h)


def canonical_to_complex(c: CanonicalState):
    return c.alpha * np.asarray(c.q, dtype=float) + 1j * c.beta * np.asarray(c.p, dtype=float)


def complex_to_canonical(z, alpha=None, planck_h=1.0):
    if planck_h <= 0:
        raise ValueError("planck_h must be positive")
    if alpha is None:
        alpha = default_alpha(planck_h)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    beta = 1.0 / (2 * alpha * planck_h)
    z = np.asarray(z, dtype=complex)
    return CanonicalState(q=z.real / alpha, p=z.imag / beta, alpha=float(alpha), beta=float(beta))


def quadratic_form(h_op, alpha, beta):
    """Symmetric ``S`` with ``Hamiltonian(q, p) = x.S.x`` for ``x = (q, p)``."""
    h_op = check_hermitian(h_op)
    a, b = h_op.real, h_op.imag
    return np.block([[alpha**2 * a, -alpha * beta * b], [alpha * beta * b, beta**2 * a]])


def classical_energy(c: CanonicalState, h_op):
    x = np.concatenate([c.q, c.p])
    return float(x @ quadratic_form(h_op, c.alpha, c.beta) @ x)


def hamiltonian_matrix(h_op, alpha, beta):
    """Generator ``K`` of the linear flow ``dx/dt = K x``."""
    s = quadratic_form(h_op, alpha, beta)
    n = s.shape[0] // 2
    j = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    return 2 * j @ s


def _check(c, h_op):
    h_op = check_hermitian(h_op)
    if h_op.shape[0] != len(c.q):
        raise DimensionError(f"Hamiltonian is {h_op.shape}, state has {len(c.q)} degrees of freedom")
    return h_op


def exact_flow(c0: CanonicalState, h_op, t):
    """Exact solution ``x(t) = expm(K t) x(0)`` of the quadratic Hamilton equations."""
    h_op = _check(c0, h_op)
    n = len(c0.q)
    x = expm(hamiltonian_matrix(h_op, c0.alpha, c0.beta) * t) @ np.concatenate([c0.q, c0.p])
    return CanonicalState(q=x[:n], p=x[n:], alpha=c0.alpha, beta=c0.beta)


def leapfrog(c0: CanonicalState, h_op, t, dt):
    """Strang splitting: cross half-step, kick, drift, kick, cross half-step.

    The cross term ``-2 alpha beta q.B.p`` rotates ``q`` and ``p`` by the same
    orthogonal matrix ``expm(2 alpha beta B s)``, applied exactly.
    """
    h_op = _check(c0, h_op)
    n_steps = int(round(t / dt))
    if abs(n_steps * dt - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"dt = {dt!r} does not divide t = {t!r}")
    alpha, beta = c0.alpha, c0.beta
    a, b = h_op.real, h_op.imag
    rot = expm(alpha * beta * b * dt)  # half step of the cross flow
    kick = alpha**2 * a * dt  # half kick: p -= 2 alpha^2 A q (dt/2)
    drift = 2 * beta**2 * a * dt
    q = np.array(c0.q, dtype=float)
    p = np.array(c0.p, dtype=float)
    for _ in range(n_steps):
        q, p = rot @ q, rot @ p
        p = p - kick @ q
        q = q + drift @ p
        p = p - kick @ q
        q, p = rot @ q, rot @ p
    return CanonicalState(q=q, p=p, alpha=alpha, beta=beta)


def classical_evolve(c0: CanonicalState, h_op, t, dt, planck_h=None, method="leapfrog"):
    """Integrate the underlying classical system up to time ``t``.

    ``method="exact"`` uses the linear symplectic flow and ignores ``dt``
    apart from the divisibility check.
    """
    if planck_h is not None and abs(2 * c0.alpha * c0.beta * planck_h - 1.0) > 1e-12:
        raise ValueError("canonical state violates 2 alpha beta = 1 / planck_h")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if method == "leapfrog":
        return leapfrog(c0, h_op, t, dt)
    if method == "exact":
        n_steps = round(t / dt)
        if abs(n_steps * dt - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"dt = {dt!r} does not divide t = {t!r}")
        return exact_flow(c0, h_op, t)
    raise ValueError(f"unknown method {method!r}")
