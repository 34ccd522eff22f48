"""Deterministic oracles for the stochastic ensemble.

``exact_mean_recursion`` and ``exact_covariance_recursion`` are the exact
one-step first and second moment maps of the discrete stochastic update.
They carry the finite-``tau`` corrections of the map, unlike the continuous
Schrödinger and Liouville solutions.
"""

from __future__ import annotations

import numpy as np

from .linalg import apply_operator, unitary_propagator
from .noise import phase_mean
from .propagator import SimulationParams
from .validation import check_density, check_hermitian, check_same_dim, check_square, check_state


def schrodinger_evolve(z0, h_op, t, planck_h=1.0):
    z0 = check_state(z0, name="initial state")
    h_op = check_hermitian(h_op)
    check_same_dim(h_op, z0, "Hamiltonian and state")
    return unitary_propagator(h_op, t, planck_h) @ z0


def liouville_evolve(rho0, h_op, t, planck_h=1.0):
    """``U rho0 U^dagger`` with the spectral propagator."""
    rho0 = check_density(rho0)
    h_op = check_hermitian(h_op)
    check_same_dim(h_op, rho0, "Hamiltonian and density matrix")
    u = unitary_propagator(h_op, t, planck_h)
    rho = u @ rho0 @ u.conj().T
    return 0.5 * (rho + rho.conj().T)


def liouville_rk4(rho0, h_op, t, dt, planck_h=1.0):
    """Classical RK4 on ``d rho/dt = (H rho - rho H) / (i h)``; validation only."""
    rho = check_square(rho0).copy()
    h_op = check_hermitian(h_op)
    n_steps = int(round(t / dt))
    if abs(n_steps * dt - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError("dt must divide t")

    def rate(r):
        return (h_op @ r - r @ h_op) / (1j * planck_h)

    for _ in range(n_steps):
        k1 = rate(rho)
        k2 = rate(rho + 0.5 * dt * k1)
        k3 = rate(rho + 0.5 * dt * k2)
        k4 = rate(rho + dt * k3)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def _require_moment_preconditions(p: SimulationParams):
    if p.scheme != "exact-phase":
        raise ValueError("moment recursions are derived for the exact-phase scheme")
    if p.renormalize:
        raise ValueError("moment recursions do not apply to renormalized trajectories")


def exact_mean_recursion(z0, h_op, p: SimulationParams, steps):
    """``M^steps z0`` with ``M = exp(-gamma tau / 2) I + (tau / (i h)) H``.

    Iterated with the same operation order as the stochastic engine, so
    ``gamma = 0`` reproduces the noise-free Euler path bit for bit.
    """
    _require_moment_preconditions(p)
    if p.noise_dist != "gaussian":
        raise ValueError("exact mean recursion supports gaussian noise only")
    h_op = check_hermitian(h_op)
    z = np.asarray(z0, dtype=complex)[None, :]
    check_same_dim(h_op, z, "Hamiltonian and state")
    decay = np.exp(-p.gamma * p.tau / 2)
    for _ in range(int(steps)):
        z = decay * z + p.drift_coefficient * apply_operator(h_op, z)
    return z[0]


def exact_covariance_recursion(rho0, h_op, p: SimulationParams, steps):
    """Iterate the exact second-moment map of one stochastic step.

    ``rho' = rho + c1 (tau/(i h)) [H, rho] + (tau/h)^2 H rho H`` with
    ``c1 = E[cos(sqrt(tau) xi)]``.  The trace is conserved only to
    ``O(tau^2)`` per step; returns ``(rho, trace)``.
    """
    _require_moment_preconditions(p)
    rho = check_square(rho0).copy()
    h_op = check_hermitian(h_op)
    check_same_dim(h_op, rho, "Hamiltonian and density matrix")
    c1 = phase_mean(p.noise_dist, p.gamma, p.tau)
    a = c1 * p.drift_coefficient
    b = (p.tau / p.planck_h) ** 2
    for _ in range(int(steps)):
        hr = h_op @ rho
        rh = rho @ h_op
        rho = rho + a * (hr - rh) + b * (hr @ h_op)
    return rho, float(np.trace(rho).real)
