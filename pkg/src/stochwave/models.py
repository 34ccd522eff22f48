"""Model Hamiltonians and finite-basis observables.

Oscillator matrix elements use the eigenbasis ladder operators truncated to
``n`` states.  Products of truncated operators are wrong in the last row and
column only, so commutator and variance checks must exclude that edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .validation import check_hermitian

SITE_BASIS = "site-basis"
OSCILLATOR_BASIS = "harmonic-oscillator-eigenbasis"
BASIS_KINDS = (SITE_BASIS, OSCILLATOR_BASIS)

MODEL_NAMES = (
    "two-level",
    "tight-binding-chain",
    "tight-binding-ring",
    "harmonic-oscillator-truncated",
    "custom-matrix",
)

# parameter name -> default (None = required)
MODEL_PARAMETERS = {
    "two-level": {"delta": 0.0, "omega": None},
    "tight-binding-chain": {"epsilon": 0.0, "hopping": None, "n": None},
    "tight-binding-ring": {"epsilon": 0.0, "hopping": None, "n": None},
    "harmonic-oscillator-truncated": {"omega": None, "n": None, "mass": 1.0},
    "custom-matrix": {},
}


@dataclass(frozen=True)
class BasisSet:
    kind: str
    size: int
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in BASIS_KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.kind == OSCILLATOR_BASIS:
            if self.size < 1:
                raise ValueError("oscillator basis needs at least one state")
            for key in ("omega", "mass"):
                if self.parameters.get(key, 1.0) <= 0:
                    raise ValueError(f"oscillator {key} must be positive")
        elif self.size < 2:
            raise ValueError("basis size must be at least 2")

    @property
    def omega(self):
        return float(self.parameters.get("omega", 1.0))

    @property
    def mass(self):
        return float(self.parameters.get("mass", 1.0))


@dataclass(frozen=True)
class ModelSpec:
    name: str
    parameters: dict = field(default_factory=dict)
    custom_entries: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.name not in MODEL_NAMES:
            raise ValueError(f"unknown model {self.name!r}; expected one of {MODEL_NAMES}")
        allowed = MODEL_PARAMETERS[self.name]
        unknown = set(self.parameters) - set(allowed)
        if unknown:
            raise ValueError(f"unknown parameters for {self.name}: {sorted(unknown)}")
        missing = [k for k, v in allowed.items() if v is None and k not in self.parameters]
        if missing:
            raise ValueError(f"missing parameters for {self.name}: {missing}")
        if self.name == "custom-matrix" and self.custom_entries is None:
            raise ValueError("custom-matrix model requires custom_entries")

    def param(self, key):
        value = self.parameters.get(key, MODEL_PARAMETERS[self.name].get(key))
        return value

    @property
    def basis(self):
        if self.name == "harmonic-oscillator-truncated":
            return BasisSet(
                OSCILLATOR_BASIS,
                int(self.param("n")),
                {"omega": float(self.param("omega")), "mass": float(self.param("mass"))},
            )
        if self.name == "two-level":
            return BasisSet(SITE_BASIS, 2)
        if self.name == "custom-matrix":
            return BasisSet(SITE_BASIS, int(np.asarray(self.custom_entries).shape[0]))
        return BasisSet(SITE_BASIS, int(self.param("n")))


def two_level(delta, omega):
    return np.array([[delta / 2, omega], [omega, -delta / 2]], dtype=complex)


def tight_binding(n, hopping, epsilon=0.0, periodic=False):
    if n < 2:
        raise ValueError("a chain needs at least 2 sites")
    if periodic and n < 3:
        # a 2-site ring would double-count the single bond
        raise ValueError("a ring needs at least 3 sites")
    h = np.diag(np.full(n, epsilon, dtype=complex))
    idx = np.arange(n - 1)
    h[idx, idx + 1] = -hopping
    h[idx + 1, idx] = -hopping
    if periodic:
        h[0, n - 1] = -hopping
        h[n - 1, 0] = -hopping
    return h


def oscillator_hamiltonian(n, omega, planck_h=1.0):
    return np.diag(planck_h * omega * (np.arange(n) + 0.5)).astype(complex)


def build_hamiltonian(spec: ModelSpec, planck_h=1.0):
    """Hamiltonian matrix for a model specification."""
    p = spec.param
    if spec.name == "two-level":
        h = two_level(float(p("delta")), float(p("omega")))
    elif spec.name == "tight-binding-chain":
        h = tight_binding(int(p("n")), float(p("hopping")), float(p("epsilon")))
    elif spec.name == "tight-binding-ring":
        h = tight_binding(int(p("n")), float(p("hopping")), float(p("epsilon")), periodic=True)
    elif spec.name == "harmonic-oscillator-truncated":
        n = int(p("n"))
        if n < 1:
            raise ValueError("oscillator truncation needs n >= 1")
        if float(p("omega")) <= 0:
            raise ValueError("oscillator omega must be positive")
        h = oscillator_hamiltonian(n, float(p("omega")), planck_h)
    else:
        h = np.array(spec.custom_entries, dtype=complex, copy=True)
    return check_hermitian(h, name=f"{spec.name} Hamiltonian")


def _lowering(n):
    a = np.zeros((n, n), dtype=complex)
    k = np.arange(1, n)
    a[k - 1, k] = np.sqrt(k)
    return a


def _require_oscillator(basis):
    if basis.kind != OSCILLATOR_BASIS:
        raise ValueError(f"position/momentum need the {OSCILLATOR_BASIS}, got {basis.kind}")


def position_operator(basis: BasisSet, planck_h=1.0):
    """``c (a + a^dagger)`` with ``c = sqrt(hbar / (2 m omega))``."""
    _require_oscillator(basis)
    c = np.sqrt(planck_h / (2 * basis.mass * basis.omega))
    a = _lowering(basis.size)
    return c * (a + a.conj().T)


def momentum_operator(basis: BasisSet, planck_h=1.0):
    """``i d (a^dagger - a)`` with ``d = sqrt(hbar m omega / 2)``; gives ``[x, p] = i hbar``."""
    _require_oscillator(basis)
    d = np.sqrt(planck_h * basis.mass * basis.omega / 2)
    a = _lowering(basis.size)
    return 1j * d * (a.conj().T - a)


def site_position_operator(n, spacing=1.0):
    """Site-basis position, ``diag(j * spacing)`` for ``j = 0..n-1``."""
    return np.diag(np.arange(n) * float(spacing)).astype(complex)
