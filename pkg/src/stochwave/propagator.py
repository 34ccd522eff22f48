"""Discrete-time phase-noise map for stochastic state vectors.

One step of the exact-phase scheme is

    z' = exp(i sqrt(tau) xi) z + (tau / (i h)) H z

with a single scalar ``xi`` per step and trajectory, so the noise rotates the
whole vector by a global phase.  The expanded scheme replaces the exponential
by ``1 + i sqrt(tau) xi - tau xi**2 / 2`` using the sampled ``xi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .linalg import apply_operator
from .noise import NOISE_DISTRIBUTIONS, NoiseSampler
from .validation import check_hermitian, check_state, check_ensemble

SCHEMES = ("exact-phase", "expanded")
STEP_TOL = 1e-9


@dataclass(frozen=True)
class SimulationParams:
    tau: float = 1e-3
    gamma: float = 1.0
    planck_h: float = 1.0
    t_max: float = 1.0
    scheme: str = "exact-phase"
    renormalize: bool = False
    noise_dist: str = "gaussian"
    record_stride: int = 1

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.tau > self.t_max:
            raise ValueError("tau must not exceed t_max")
        if not self.gamma >= 0:
            raise ValueError("gamma must be non-negative")
        if not self.planck_h > 0:
            raise ValueError("planck_h must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.noise_dist not in NOISE_DISTRIBUTIONS:
            raise ValueError(f"noise_dist must be one of {NOISE_DISTRIBUTIONS}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")
        ratio = self.t_max / self.tau
        if abs(ratio - round(ratio)) > STEP_TOL * max(1.0, ratio):
            raise ValueError(
                f"t_max/tau = {ratio!r} is not an integer step count; adjust tau or t_max"
            )

    @property
    def n_steps(self):
        return int(round(self.t_max / self.tau))

    @property
    def drift_coefficient(self):
        return self.tau / (1j * self.planck_h)

    def with_(self, **changes):
        return replace(self, **changes)


def _renormalize(z):
    norms = np.linalg.norm(z, axis=-1, keepdims=True)
    return z / norms


def step_exact_phase(z, h_op, p: SimulationParams, xi):
    """One exact-phase step; ``z`` may be a single state or a batch of rows."""
    z = np.asarray(z, dtype=complex)
    xi = np.asarray(xi, dtype=float)
    phase = np.exp(1j * np.sqrt(p.tau) * xi)[..., None]
    out = phase * z + p.drift_coefficient * apply_operator(h_op, z)
    if p.renormalize:
        out = _renormalize(out)
    return out


def step_expanded(z, h_op, p: SimulationParams, xi):
    """One step of the second-order expansion of the phase factor."""
    z = np.asarray(z, dtype=complex)
    xi = np.asarray(xi, dtype=float)
    factor = (1 + 1j * np.sqrt(p.tau) * xi - 0.5 * p.tau * xi**2)[..., None]
    out = factor * z + p.drift_coefficient * apply_operator(h_op, z)
    if p.renormalize:
        out = _renormalize(out)
    return out


STEPPERS = {"exact-phase": step_exact_phase, "expanded": step_expanded}


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    final_state: np.ndarray
    norm_drift: float


@dataclass
class EnsembleRun:
    """Result of propagating a block of trajectories side by side.

    ``states`` has shape ``(n_records, n_traj, n)`` when states were kept and is
    ``None`` otherwise.
    """

    trajectories: np.ndarray
    times: np.ndarray
    final_states: np.ndarray
    norm_drift: np.ndarray
    states: Optional[np.ndarray] = field(default=None, repr=False)


def record_steps(p: SimulationParams):
    steps = list(range(0, p.n_steps + 1, p.record_stride))
    if steps[-1] != p.n_steps:
        steps.append(p.n_steps)
    return np.array(steps)


def run_ensemble(Z0, h_op, p: SimulationParams, sampler: NoiseSampler, trajectories=None, keep_states=False):
    """Propagate each row of ``Z0`` as its own trajectory.

    Row ``i`` uses the noise stream of ``trajectories[i]`` (default ``i``).
    Norm drift is evaluated at the recording steps, including the initial one.
    """
    h_op = check_hermitian(h_op, name="Hamiltonian")
    Z = check_ensemble(Z0, n_features=h_op.shape[0])
    norms0 = np.linalg.norm(Z, axis=1)
    if np.any(np.abs(norms0 - 1.0) > 1e-12):
        raise ValueError("initial states must be normalized within 1e-12")
    if trajectories is None:
        trajectories = np.arange(Z.shape[0])
    trajectories = np.asarray(trajectories, dtype=np.uint64)
    if trajectories.shape != (Z.shape[0],):
        raise ValueError("one trajectory index per initial state is required")
    if sampler.gamma != p.gamma or sampler.dist != p.noise_dist:
        raise ValueError("noise sampler does not match the simulation parameters")

    step = STEPPERS[p.scheme]
    rec = record_steps(p)
    noise = sampler.block(trajectories, p.n_steps)
    drift = np.abs(norms0 - 1.0)
    kept = [Z.copy()] if keep_states else None
    rec_set = set(int(s) for s in rec[1:])
    for s in range(p.n_steps):
        Z = step(Z, h_op, p, noise[s])
        if s + 1 in rec_set:
            drift = np.maximum(drift, np.abs(np.linalg.norm(Z, axis=1) - 1.0))
            if keep_states:
                kept.append(Z.copy())
    return EnsembleRun(
        trajectories=trajectories,
        times=rec * p.tau,
        final_states=Z,
        norm_drift=drift,
        states=np.stack(kept) if keep_states else None,
    )


def run_trajectory(z0, h_op, p: SimulationParams, sampler: NoiseSampler, trajectory=0):
    """Single stochastic trajectory with states kept every ``record_stride`` steps."""
    z0 = check_state(z0, name="initial state")
    run = run_ensemble(z0[None, :], h_op, p, sampler, [trajectory], keep_states=True)
    return Trajectory(
        times=run.times,
        states=run.states[:, 0, :],
        final_state=run.final_states[0],
        norm_drift=float(run.norm_drift[0]),
    )


def euler_path(z0, h_op, p: SimulationParams):
    """Noise-free Euler iterates ``z + (tau/(i h)) H z`` at every step (shape ``(n_steps+1, n)``)."""
    z = np.asarray(z0, dtype=complex)[None, :]
    out = [z[0]]
    for _ in range(p.n_steps):
        z = z + p.drift_coefficient * apply_operator(h_op, z)
        out.append(z[0])
    return np.array(out)
