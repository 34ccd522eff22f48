"""Ensemble statistics: mean vectors, covariance density matrices, moment checks.

The density matrix estimate is the raw second moment ``<z_j conj(z_k)>`` with
``1/N`` normalization; it is not mean-centred.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import apply_operator
from .noise import NoiseSampler, initial_uniforms
from .propagator import SimulationParams, record_steps, run_ensemble
from .validation import DimensionError, check_ensemble, check_square, check_state

BLOCK_SIZE = 256


class _KahanSum:
    """Compensated running sum of equally shaped arrays."""

    __slots__ = ("total", "comp")

    def __init__(self, shape, dtype):
        self.total = np.zeros(shape, dtype=dtype)
        self.comp = np.zeros(shape, dtype=dtype)

    def add(self, value):
        y = value - self.comp
        t = self.total + y
        self.comp = (t - self.total) - y
        self.total = t

    @property
    def value(self):
        return self.total - self.comp


def _squares(x):
    return x.real**2 + 1j * x.imag**2


class _Moments:
    """First and second moments of a complex quantity, shifted by its first sample.

    The shift keeps the variance exact when all samples coincide.  Real and
    imaginary second moments are packed into one complex array.
    """

    def __init__(self, shape):
        self.shape = shape
        self.count = 0
        self.shift = None
        self.s1 = _KahanSum(shape, complex)
        self.s2 = _KahanSum(shape, complex)

    def add(self, X):
        if self.shift is None:
            self.shift = X[0].copy()
        d = X - self.shift
        self.s1.add(d.sum(axis=0))
        self.s2.add(_squares(d).sum(axis=0))
        self.count += X.shape[0]

    def merge(self, other):
        if other.count == 0:
            return
        if self.shift is None:
            self.shift = other.shift.copy()
        d = other.shift - self.shift
        s1, s2, m = other.s1.value, other.s2.value, other.count
        self.s1.add(s1 + m * d)
        self.s2.add(
            (s2.real + 2 * d.real * s1.real + m * d.real**2)
            + 1j * (s2.imag + 2 * d.imag * s1.imag + m * d.imag**2)
        )
        self.count += m

    def total(self):
        if self.shift is None:
            return np.zeros(self.shape, dtype=complex)
        return self.count * self.shift + self.s1.value

    def mean(self):
        return self.shift + self.s1.value / self.count

    def standard_error(self):
        """Root-sum-square of real and imaginary standard errors (ddof=1)."""
        n = self.count
        s1, s2 = self.s1.value, self.s2.value
        var_re = (s2.real - s1.real**2 / n) / (n - 1)
        var_im = (s2.imag - s1.imag**2 / n) / (n - 1)
        var = np.clip(var_re, 0, None) + np.clip(var_im, 0, None)
        return np.sqrt(var / n)


@dataclass
class EnsembleAccumulator:
    """Running moments over trajectories of ``z``, ``z z^dagger`` and tracked observables.

    ``operators`` maps labels to matrices ``A`` whose per-trajectory values
    ``z^dagger A z`` are accumulated alongside.
    """

    dim: int
    operators: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.dim
        self._z = _Moments((n,))
        self._outer = _Moments((n, n))
        self._obs = {name: _Moments(()) for name in self.operators}

    @property
    def count(self):
        return self._z.count

    @property
    def sum_z(self):
        return self._z.total()

    @property
    def sum_outer(self):
        return self._outer.total()

    @property
    def sum_sq_diag(self):
        """Sum over trajectories of ``|z_j|^4``."""
        k = self._outer.shift.diagonal().real if self.count else np.zeros(self.dim)
        s1 = self._outer.s1.value.diagonal().real
        s2 = self._outer.s2.value.diagonal().real
        return s2 + 2 * k * s1 + self.count * k**2

    def accumulate(self, z):
        """Add trajectories ``z`` (one state or a batch of rows); returns ``self``."""
        Z = check_ensemble(z, n_features=self.dim)
        self._z.add(Z)
        self._outer.add(_outer(Z))
        for name, a in self.operators.items():
            self._obs[name].add(np.einsum("ij,jk,ik->i", Z.conj(), a, Z))
        return self

    def merge(self, other: "EnsembleAccumulator"):
        if other.dim != self.dim:
            raise DimensionError("cannot merge accumulators of different dimension")
        if set(other.operators) != set(self.operators):
            raise ValueError("cannot merge accumulators tracking different observables")
        self._z.merge(other._z)
        self._outer.merge(other._outer)
        for name in self.operators:
            self._obs[name].merge(other._obs[name])
        return self

    def _require(self, n_min=2):
        if self.count < n_min:
            raise ValueError(f"need at least {n_min} trajectories, have {self.count}")

    def density(self):
        self._require()
        rho = self._outer.mean()
        return 0.5 * (rho + rho.conj().T)

    def density_standard_error(self):
        self._require()
        return self._outer.standard_error()

    def mean(self):
        self._require()
        return self._z.mean()

    def mean_standard_error(self):
        self._require()
        return self._z.standard_error()

    def observable(self, name):
        """``(value, standard_error)`` of a tracked operator; the error is NaN below two trajectories."""
        m = self._obs[name]
        value = complex(m.mean())
        if m.count < 2:
            return value, float("nan")
        return value, float(m.standard_error())

    def raw_density(self):
        """``sum_outer / count`` without the two-trajectory minimum."""
        return self._outer.mean()

    def raw_mean(self):
        return self._z.mean()


def _outer(Z):
    """Per-row ``z z^dagger`` with Hermitian symmetry enforced exactly."""
    n = Z.shape[1]
    outer = Z[:, :, None] * Z[:, None, :].conj()
    iu = np.triu_indices(n, 1)
    outer[:, iu[1], iu[0]] = outer[:, iu[0], iu[1]].conj()
    d = np.arange(n)
    outer[:, d, d] = np.abs(Z) ** 2
    return outer


def estimate_density(acc: EnsembleAccumulator):
    """``(rho_hat, standard_errors)`` from an accumulator."""
    return acc.density(), acc.density_standard_error()


def estimate_mean(acc: EnsembleAccumulator):
    return acc.mean(), acc.mean_standard_error()


# -- initial ensembles --------------------------------------------------------


@dataclass(frozen=True)
class InitialEnsemble:
    kind: str = "deterministic"
    base_state: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "deterministic":
            if self.base_state is None:
                raise ValueError("deterministic initial ensemble needs base_state")
            check_state(self.base_state, name="base_state")
        elif self.kind == "basis-mixture":
            if self.weights is None:
                raise ValueError("basis-mixture initial ensemble needs weights")
            w = np.asarray(self.weights, dtype=float)
            if w.ndim != 1 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ValueError("weights must be non-negative and sum to 1 within 1e-12")
        else:
            raise ValueError(f"unknown initial ensemble kind {self.kind!r}")

    @property
    def dim(self):
        return len(self.base_state) if self.kind == "deterministic" else len(self.weights)

    def density(self):
        """Population density matrix of the initial ensemble."""
        if self.kind == "deterministic":
            z = np.asarray(self.base_state, dtype=complex)
            return np.outer(z, z.conj())
        return np.diag(np.asarray(self.weights, dtype=float)).astype(complex)

    def mean(self):
        if self.kind == "deterministic":
            return np.asarray(self.base_state, dtype=complex)
        return np.asarray(self.weights, dtype=complex)

    def sample(self, trajectories, seed=0):
        """Initial states for the given trajectory indices (rows)."""
        trajectories = np.asarray(trajectories)
        n = self.dim
        if self.kind == "deterministic":
            return np.tile(np.asarray(self.base_state, dtype=complex), (len(trajectories), 1))
        cdf = np.cumsum(np.asarray(self.weights, dtype=float))
        cdf[-1] = 1.0
        u = initial_uniforms(seed, trajectories)
        idx = np.searchsorted(cdf, u, side="right")
        idx = np.minimum(idx, n - 1)
        Z = np.zeros((len(trajectories), n), dtype=complex)
        Z[np.arange(len(trajectories)), idx] = 1.0
        return Z


# -- orchestration ------------------------------------------------------------


@dataclass
class EnsembleResult:
    """Statistics of an ensemble at the recording times.

    ``accumulators[r]`` aggregates every trajectory at ``times[r]``.
    """

    times: np.ndarray
    accumulators: list
    norm_drift: float
    final_states: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def final(self):
        return self.accumulators[-1]


def simulate_ensemble(
    initial: InitialEnsemble,
    h_op,
    p: SimulationParams,
    n_trajectories,
    seed=0,
    threads=1,
    operators=None,
    time_resolved=False,
    keep_final_states=False,
    block_size=BLOCK_SIZE,
):
    """Run ``n_trajectories`` trajectories in fixed blocks and reduce in index order.

    Blocks are defined by trajectory index ranges independent of ``threads``,
    so the aggregates are bit-identical for any worker count.
    """
    if n_trajectories < 1:
        raise ValueError("need at least one trajectory")
    sampler = NoiseSampler(p.noise_dist, p.gamma, seed)
    n = h_op.shape[0]
    if initial.dim != n:
        raise DimensionError(f"initial ensemble has dimension {initial.dim}, Hamiltonian {n}")
    starts = list(range(0, n_trajectories, block_size))
    n_records = len(record_steps(p)) if time_resolved else 1
    operators = dict(operators or {})

    def work(start):
        idx = np.arange(start, min(start + block_size, n_trajectories))
        run = run_ensemble(initial.sample(idx, seed), h_op, p, sampler, idx, keep_states=time_resolved)
        accs = []
        snapshots = run.states if time_resolved else [run.final_states]
        for snap in snapshots:
            accs.append(EnsembleAccumulator(n, operators).accumulate(snap))
        return accs, float(run.norm_drift.max()), (run.final_states if keep_final_states else None)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(work, starts))
    else:
        blocks = [work(s) for s in starts]

    totals = [EnsembleAccumulator(n, operators) for _ in range(n_records)]
    drift = 0.0
    for accs, d, _ in blocks:
        for total, acc in zip(totals, accs):
            total.merge(acc)
        drift = max(drift, d)
    times = record_steps(p) * p.tau if time_resolved else np.array([p.n_steps * p.tau])
    finals = np.concatenate([b[2] for b in blocks]) if keep_final_states else None
    return EnsembleResult(times=times, accumulators=totals, norm_drift=drift, final_states=finals)


# -- moment checks and oracle comparison --------------------------------------


@dataclass
class MomentCheck:
    lhs: complex
    rhs: complex
    discrepancy: float
    paired_standard_error: float
    drift_term: complex
    damping_term: complex
    diffusion_term: complex

    def within(self, k=4.0):
        return self.discrepancy <= k * self.paired_standard_error


def bilinear(F, Z):
    """``sum_jk F_jk z_j conj(z_k)`` per row."""
    return np.einsum("jk,ij,ik->i", F, Z, Z.conj())


def moment_rate_check(Z_t, Z_next, F, h_op, p: SimulationParams, trajectories_t=None, trajectories_next=None):
    """Compare ``(<F>(t+tau) - <F>(t)) / tau`` with the drift-diffusion rate at ``t``.

    Rows of ``Z_t`` and ``Z_next`` must be the same trajectories one step apart.
    The standard error is that of the per-trajectory difference between the
    finite-difference rate and the rate expression.
    """
    Z_t = check_ensemble(Z_t, min_samples=2)
    Z_next = check_ensemble(Z_next, n_features=Z_t.shape[1])
    if Z_t.shape != Z_next.shape:
        raise ValueError("moment check needs paired samples: ensembles differ in size")
    if trajectories_t is not None or trajectories_next is not None:
        if trajectories_t is None or trajectories_next is None or not np.array_equal(
            np.asarray(trajectories_t), np.asarray(trajectories_next)
        ):
            raise ValueError("moment check needs paired samples: trajectory indices differ")
    F = check_square(F)
    if F.shape[0] != Z_t.shape[1]:
        raise DimensionError("observable and states differ in dimension")

    g = p.gamma
    f = apply_operator(h_op, Z_t) / (1j * p.planck_h)
    dF_dz = Z_t.conj() @ F.T  # row i, index j: sum_k F_jk conj(z_k)
    dF_dzc = Z_t @ F  # row i, index k: sum_j F_jk z_j
    drift = np.sum(f * dF_dz, axis=1) + np.sum(f.conj() * dF_dzc, axis=1)
    damping = -0.5 * g * (np.sum(Z_t * dF_dz, axis=1) + np.sum(Z_t.conj() * dF_dzc, axis=1))
    diffusion = g * bilinear(F, Z_t)
    rhs_i = drift + damping + diffusion
    lhs_i = (bilinear(F, Z_next) - bilinear(F, Z_t)) / p.tau

    diff = lhs_i - rhs_i
    n = len(diff)
    se = np.sqrt((np.var(diff.real, ddof=1) + np.var(diff.imag, ddof=1)) / n)
    lhs, rhs = lhs_i.mean(), rhs_i.mean()
    return MomentCheck(
        lhs=complex(lhs),
        rhs=complex(rhs),
        discrepancy=float(abs(lhs - rhs)),
        paired_standard_error=float(se),
        drift_term=complex(drift.mean()),
        damping_term=complex(damping.mean()),
        diffusion_term=complex(diffusion.mean()),
    )


@dataclass
class ComparisonReport:
    frobenius_error: float
    max_element_error: float
    trace_error: float
    mean_error: float
    standard_error_scale: float
    pass_: bool

    def as_dict(self):
        return {
            "frobenius_error": self.frobenius_error,
            "max_element_error": self.max_element_error,
            "trace_error": self.trace_error,
            "mean_error": self.mean_error,
            "standard_error_scale": self.standard_error_scale,
            "pass": self.pass_,
        }


ROUNDOFF_TOL = 1e-12


def compare_to_oracle(rho_hat, rho_ref, standard_errors=None, tau=0.0, k=4.0, c_bias=1.0, atol=ROUNDOFF_TOL):
    """Elementwise comparison; passes when ``|diff| <= k * SE + c_bias * tau + atol`` everywhere.

    ``atol`` absorbs floating-point roundoff when the standard errors vanish
    (noise-free ensembles).  ``mean_error`` is the mean absolute elementwise
    error and ``standard_error_scale`` the largest elementwise standard error.
    """
    rho_hat = check_square(rho_hat)
    rho_ref = check_square(rho_ref)
    if rho_hat.shape != rho_ref.shape:
        raise DimensionError(f"shapes differ: {rho_hat.shape} vs {rho_ref.shape}")
    se = np.zeros(rho_hat.shape) if standard_errors is None else np.asarray(standard_errors, dtype=float)
    diff = np.abs(rho_hat - rho_ref)
    ok = bool(np.all(diff <= k * se + c_bias * tau + atol))
    return ComparisonReport(
        frobenius_error=float(np.linalg.norm(rho_hat - rho_ref)),
        max_element_error=float(diff.max()),
        trace_error=float(abs(np.trace(rho_hat) - np.trace(rho_ref))),
        mean_error=float(diff.mean()),
        standard_error_scale=float(se.max()),
        pass_=ok,
    )
