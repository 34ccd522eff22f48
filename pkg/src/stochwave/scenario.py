"""Scenario documents: strict YAML parsing, overrides and semantic hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import yaml

from .ensemble import InitialEnsemble
from .models import MODEL_NAMES, ModelSpec
from .propagator import SimulationParams

OBSERVABLE_LABELS = ("identity", "hamiltonian", "position", "momentum", "site_position")


class ScenarioError(ValueError):
    """Invalid scenario document; ``path`` names the offending key."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class ObservableSpec:
    label: str
    lattice_spacing: float = 1.0


@dataclass(frozen=True)
class Scenario:
    model: ModelSpec
    initial: InitialEnsemble
    params: SimulationParams
    trajectories: int
    master_seed: int = 0
    observables: tuple = ()
    gamma_sweep: Optional[tuple] = None
    tau_sweep: Optional[tuple] = None
    output_directory: str = "run"
    time_resolved: bool = False
    k_sigma: float = 4.0
    c_bias: float = 1.0
    name: str = ""
    normalize_initial: bool = False

    @property
    def gammas(self):
        return self.gamma_sweep if self.gamma_sweep is not None else (self.params.gamma,)

    @property
    def taus(self):
        return self.tau_sweep if self.tau_sweep is not None else (self.params.tau,)

    def semantic_dict(self):
        """Every field that affects numeric output; the output directory is excluded."""
        return {
            "name": self.name,
            "model": {
                "name": self.model.name,
                "parameters": {k: float(v) for k, v in self.model.parameters.items()},
                "entries": None if self.model.custom_entries is None else _encode_matrix(self.model.custom_entries),
            },
            "initial": {
                "kind": self.initial.kind,
                "state": None if self.initial.base_state is None else _encode_vector(self.initial.base_state),
                "weights": None if self.initial.weights is None else [float(w) for w in self.initial.weights],
            },
            "params": {
                "tau": self.params.tau,
                "gamma": self.params.gamma,
                "planck_h": self.params.planck_h,
                "t_max": self.params.t_max,
                "scheme": self.params.scheme,
                "renormalize": self.params.renormalize,
                "noise_dist": self.params.noise_dist,
                "record_stride": self.params.record_stride,
            },
            "trajectories": self.trajectories,
            "master_seed": self.master_seed,
            "observables": [{"label": o.label, "lattice_spacing": o.lattice_spacing} for o in self.observables],
            "sweeps": {
                "gamma": None if self.gamma_sweep is None else list(self.gamma_sweep),
                "tau": None if self.tau_sweep is None else list(self.tau_sweep),
            },
            "outputs": {"time_resolved": self.time_resolved},
            "comparison": {"k_sigma": self.k_sigma, "c_bias": self.c_bias},
        }

    def hash(self):
        """SHA-256 of the semantic fields; the name is a label and is left out too."""
        doc = self.semantic_dict()
        del doc["name"]
        text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _encode_vector(v):
    return [[float(x.real), float(x.imag)] for x in np.asarray(v, dtype=complex)]


def _encode_matrix(m):
    return [_encode_vector(row) for row in np.asarray(m, dtype=complex)]


# -- parsing ------------------------------------------------------------------

_TOP_KEYS = {
    "name": False,
    "model": True,
    "initial": True,
    "params": True,
    "trajectories": True,
    "master_seed": False,
    "observables": False,
    "sweeps": False,
    "outputs": False,
    "comparison": False,
}


def _mapping(node, path, allowed, required=()):
    if not isinstance(node, dict):
        raise ScenarioError(path, f"expected a mapping, got {type(node).__name__}")
    unknown = set(node) - set(allowed)
    if unknown:
        raise ScenarioError(f"{path}.{sorted(unknown)[0]}" if path else sorted(unknown)[0], "unknown key")
    for key in required:
        if key not in node:
            raise ScenarioError(f"{path}.{key}" if path else key, "missing required key")
    return node


def _number(value, path, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(path, f"expected a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ScenarioError(path, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _complex(value, path):
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ScenarioError(path, "complex numbers are [re, im] pairs")
        return complex(_number(value[0], path), _number(value[1], path))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError as exc:
            raise ScenarioError(path, f"cannot parse complex number {value!r}") from exc
    return complex(_number(value, path))


def _vector(node, path):
    if not isinstance(node, list) or not node:
        raise ScenarioError(path, "expected a non-empty list")
    return np.array([_complex(x, f"{path}[{i}]") for i, x in enumerate(node)], dtype=complex)


def _bool(value, path):
    if not isinstance(value, bool):
        raise ScenarioError(path, f"expected true/false, got {value!r}")
    return value


def _parse_model(node):
    node = _mapping(node, "model", {"name", "parameters", "entries"}, ("name",))
    name = node["name"]
    if name not in MODEL_NAMES:
        raise ScenarioError("model.name", f"unknown model {name!r}; expected one of {list(MODEL_NAMES)}")
    params = node.get("parameters") or {}
    if not isinstance(params, dict):
        raise ScenarioError("model.parameters", "expected a mapping")
    params = {k: _number(v, f"model.parameters.{k}") for k, v in params.items()}
    entries = None
    if "entries" in node:
        rows = node["entries"]
        if not isinstance(rows, list):
            raise ScenarioError("model.entries", "expected a list of rows")
        entries = np.array([_vector(r, f"model.entries[{i}]") for i, r in enumerate(rows)])
    try:
        return ModelSpec(name, params, entries)
    except ValueError as exc:
        raise ScenarioError("model", str(exc)) from exc


def _parse_initial(node):
    node = _mapping(node, "initial", {"kind", "state", "weights", "normalize"}, ("kind",))
    kind = node["kind"]
    normalize = _bool(node.get("normalize", False), "initial.normalize")
    try:
        if kind == "deterministic":
            if "state" not in node:
                raise ScenarioError("initial.state", "missing required key")
            state = _vector(node["state"], "initial.state")
            if normalize:
                state = state / np.linalg.norm(state)
            return InitialEnsemble(kind, base_state=state), normalize
        if kind == "basis-mixture":
            if "weights" not in node:
                raise ScenarioError("initial.weights", "missing required key")
            w = node["weights"]
            if not isinstance(w, list):
                raise ScenarioError("initial.weights", "expected a list")
            weights = np.array([_number(x, f"initial.weights[{i}]") for i, x in enumerate(w)])
            return InitialEnsemble(kind, weights=weights), normalize
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError("initial", str(exc)) from exc
    raise ScenarioError("initial.kind", f"unknown kind {kind!r}")


_PARAM_TYPES = {
    "tau": float,
    "gamma": float,
    "planck_h": float,
    "t_max": float,
    "scheme": str,
    "renormalize": bool,
    "noise_dist": str,
    "record_stride": int,
}


def _parse_params(node):
    node = _mapping(node, "params", set(_PARAM_TYPES), ("tau", "gamma", "t_max"))
    values = {}
    for key, value in node.items():
        kind = _PARAM_TYPES[key]
        path = f"params.{key}"
        if kind is bool:
            values[key] = _bool(value, path)
        elif kind is str:
            if not isinstance(value, str):
                raise ScenarioError(path, f"expected a string, got {value!r}")
            values[key] = value
        else:
            values[key] = _number(value, path, kind)
    try:
        return SimulationParams(**values)
    except ValueError as exc:
        raise ScenarioError("params", str(exc)) from exc


def _parse_observables(node):
    if not isinstance(node, list):
        raise ScenarioError("observables", "expected a list")
    out = []
    for i, item in enumerate(node):
        path = f"observables[{i}]"
        if isinstance(item, str):
            item = {"label": item}
        item = _mapping(item, path, {"label", "lattice_spacing"}, ("label",))
        if item["label"] not in OBSERVABLE_LABELS:
            raise ScenarioError(f"{path}.label", f"unknown observable {item['label']!r}")
        spacing = _number(item.get("lattice_spacing", 1.0), f"{path}.lattice_spacing")
        out.append(ObservableSpec(item["label"], spacing))
    labels = [o.label for o in out]
    if len(set(labels)) != len(labels):
        raise ScenarioError("observables", "duplicate observable label")
    return tuple(out)


def _parse_sweep(node, key):
    if node is None:
        return None
    if not isinstance(node, list) or not node:
        raise ScenarioError(f"sweeps.{key}", "expected a non-empty list")
    return tuple(_number(x, f"sweeps.{key}[{i}]") for i, x in enumerate(node))


def build_scenario(doc, source_name=""):
    """Validate a parsed document (nested dicts/lists) into a :class:`Scenario`."""
    doc = _mapping(doc, "", set(_TOP_KEYS), [k for k, req in _TOP_KEYS.items() if req])
    model = _parse_model(doc["model"])
    initial, normalize = _parse_initial(doc["initial"])
    params = _parse_params(doc["params"])
    trajectories = _number(doc["trajectories"], "trajectories", int)
    if trajectories < 1:
        raise ScenarioError("trajectories", "must be at least 1")
    seed = _number(doc.get("master_seed", 0), "master_seed", int)
    if not 0 <= seed < 2**64:
        raise ScenarioError("master_seed", "must be a 64-bit unsigned integer")
    observables = _parse_observables(doc.get("observables", []))

    sweeps = _mapping(doc.get("sweeps") or {}, "sweeps", {"gamma", "tau"})
    gamma_sweep = _parse_sweep(sweeps.get("gamma"), "gamma")
    tau_sweep = _parse_sweep(sweeps.get("tau"), "tau")
    outputs = _mapping(doc.get("outputs") or {}, "outputs", {"directory", "time_resolved"})
    directory = outputs.get("directory", "run")
    if not isinstance(directory, str):
        raise ScenarioError("outputs.directory", "expected a path string")
    time_resolved = _bool(outputs.get("time_resolved", False), "outputs.time_resolved")
    comparison = _mapping(doc.get("comparison") or {}, "comparison", {"k_sigma", "c_bias"})
    k_sigma = _number(comparison.get("k_sigma", 4.0), "comparison.k_sigma")
    c_bias = _number(comparison.get("c_bias", 1.0), "comparison.c_bias")
    name = doc.get("name", source_name)
    if not isinstance(name, str):
        raise ScenarioError("name", "expected a string")

    scenario = Scenario(
        model=model,
        initial=initial,
        params=params,
        trajectories=trajectories,
        master_seed=seed,
        observables=observables,
        gamma_sweep=gamma_sweep,
        tau_sweep=tau_sweep,
        output_directory=directory,
        time_resolved=time_resolved,
        k_sigma=k_sigma,
        c_bias=c_bias,
        name=name,
        normalize_initial=normalize,
    )
    validate_scenario(scenario)
    return scenario


def validate_scenario(s: Scenario):
    """Cross-field checks: dimensions, observable/basis compatibility, sweep cells."""
    n = s.model.basis.size
    if s.initial.dim != n:
        raise ScenarioError("initial", f"initial ensemble has dimension {s.initial.dim}, model has {n}")
    for obs in s.observables:
        if obs.label in ("position", "momentum") and s.model.name != "harmonic-oscillator-truncated":
            raise ScenarioError("observables", f"{obs.label} needs the harmonic-oscillator model")
    for i, g in enumerate(s.gammas):
        for j, t in enumerate(s.taus):
            try:
                s.params.with_(gamma=g, tau=t)
            except ValueError as exc:
                path = "sweeps" if (s.gamma_sweep or s.tau_sweep) else "params"
                raise ScenarioError(path, f"cell gamma={g!r}, tau={t!r}: {exc}") from exc
    try:
        from .models import build_hamiltonian

        build_hamiltonian(s.model, s.params.planck_h)
    except ValueError as exc:
        raise ScenarioError("model", str(exc)) from exc


def parse_scenario(text, source_name=""):
    """Parse YAML text into a validated :class:`Scenario`."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError("", f"malformed document: {exc}") from exc
    return build_scenario(doc, source_name)


def load_scenario(path):
    from pathlib import Path

    path = Path(path)
    return parse_scenario(path.read_text(), source_name=path.stem)


def apply_overrides(s: Scenario, seed=None, trajectories=None, tau=None, gamma=None, output=None):
    """Command-line overrides; ``tau``/``gamma`` replace the value and drop its sweep."""
    changes = {}
    params = s.params
    if seed is not None:
        changes["master_seed"] = int(seed)
    if trajectories is not None:
        if trajectories < 1:
            raise ScenarioError("trajectories", "must be at least 1")
        changes["trajectories"] = int(trajectories)
    try:
        if tau is not None:
            params = params.with_(tau=float(tau))
            changes["tau_sweep"] = None
        if gamma is not None:
            params = params.with_(gamma=float(gamma))
            changes["gamma_sweep"] = None
    except ValueError as exc:
        raise ScenarioError("params", str(exc)) from exc
    changes["params"] = params
    if output is not None:
        changes["output_directory"] = str(output)
    out = replace(s, **changes)
    validate_scenario(out)
    return out
