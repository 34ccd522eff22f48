"""Scenario execution and CSV/JSON output.

Each sweep cell ``(tau, gamma)`` writes ``cell_XX.csv``; the run directory also
holds ``comparison.csv``, ``gamma_invariance.csv`` (when more than one gamma is
swept), ``scenario.json`` and ``manifest.json``.  Only the manifest carries a
timestamp, so every CSV is a pure function of the scenario.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from itertools import combinations
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import compare_to_oracle, simulate_ensemble
from .linalg import unitary_propagator
from .models import (
    build_hamiltonian,
    momentum_operator,
    position_operator,
    site_position_operator,
)
from .reference import exact_covariance_recursion, exact_mean_recursion
from .scenario import Scenario

log = logging.getLogger(__name__)


@dataclass
class RunManifest:
    scenario_hash: str
    engine_version: str
    timestamp: str
    cells: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def as_dict(self):
        return {
            "scenario_hash": self.scenario_hash,
            "engine_version": self.engine_version,
            "timestamp": self.timestamp,
            "cells": self.cells,
            "files": self.files,
        }


def observable_operators(s: Scenario, h_op):
    basis = s.model.basis
    ops = {}
    for obs in s.observables:
        if obs.label == "identity":
            ops[obs.label] = np.eye(basis.size, dtype=complex)
        elif obs.label == "hamiltonian":
            ops[obs.label] = h_op
        elif obs.label == "position":
            ops[obs.label] = position_operator(basis, s.params.planck_h)
        elif obs.label == "momentum":
            ops[obs.label] = momentum_operator(basis, s.params.planck_h)
        elif obs.label == "site_position":
            ops[obs.label] = site_position_operator(basis.size, obs.lattice_spacing)
    return ops


def _fmt(x):
    return repr(float(x))


def _pairs(n):
    return [(j, k) for j in range(n) for k in range(n)]


def recursions_apply(p):
    return p.scheme == "exact-phase" and not p.renormalize


@dataclass
class CellResult:
    index: int
    tau: float
    gamma: float
    header: list
    rows: list
    rho: np.ndarray
    rho_se: np.ndarray
    liouville: np.ndarray
    recursion: object
    mean: np.ndarray
    mean_se: np.ndarray
    mean_oracle: object
    norm_drift: float
    trajectories: int
    reports: dict

    @property
    def filename(self):
        return f"cell_{self.index:02d}.csv"


def run_cell(s: Scenario, index, tau, gamma, threads=1):
    p = s.params.with_(tau=tau, gamma=gamma)
    h_op = build_hamiltonian(s.model, p.planck_h)
    n = h_op.shape[0]
    ops = observable_operators(s, h_op)
    result = simulate_ensemble(
        s.initial,
        h_op,
        p,
        s.trajectories,
        seed=s.master_seed,
        threads=threads,
        operators=ops,
        time_resolved=s.time_resolved,
    )
    rho0 = s.initial.density()
    mean0 = s.initial.mean()
    with_rec = recursions_apply(p)
    with_mean = with_rec and p.noise_dist == "gaussian"
    steps = np.rint(result.times / p.tau).astype(int)

    header = ["time"]
    for j, k in _pairs(n):
        header += [f"rho_{j}_{k}_re", f"rho_{j}_{k}_im"]
    header += [f"se_{j}_{k}" for j, k in _pairs(n)]
    for j, k in _pairs(n):
        header += [f"liouville_{j}_{k}_re", f"liouville_{j}_{k}_im"]
    if with_rec:
        for j, k in _pairs(n):
            header += [f"recursion_{j}_{k}_re", f"recursion_{j}_{k}_im"]
    for j in range(n):
        header += [f"mean_{j}_re", f"mean_{j}_im"]
    header += [f"mean_se_{j}" for j in range(n)]
    if with_mean:
        for j in range(n):
            header += [f"mean_oracle_{j}_re", f"mean_oracle_{j}_im"]
    header += ["trace"]
    for label in ops:
        header += [f"obs_{label}_re", f"obs_{label}_im", f"obs_{label}_se", f"obs_{label}_oracle"]

    rows = []
    rec_rho, rec_step = rho0.copy(), 0
    mean_vec, mean_step = mean0.copy(), 0
    for t, step, acc in zip(result.times, steps, result.accumulators):
        rho = acc.raw_density()
        rho = 0.5 * (rho + rho.conj().T)
        if acc.count >= 2:
            rho_se, mean_se = acc.density_standard_error(), acc.mean_standard_error()
        else:
            rho_se, mean_se = np.full((n, n), np.nan), np.full(n, np.nan)
        mean = acc.raw_mean()
        u = unitary_propagator(h_op, t, p.planck_h)
        liou = u @ rho0 @ u.conj().T
        row = [_fmt(t)]
        for j, k in _pairs(n):
            row += [_fmt(rho[j, k].real), _fmt(rho[j, k].imag)]
        row += [_fmt(rho_se[j, k]) for j, k in _pairs(n)]
        for j, k in _pairs(n):
            row += [_fmt(liou[j, k].real), _fmt(liou[j, k].imag)]
        if with_rec:
            rec_rho, _ = exact_covariance_recursion(rec_rho, h_op, p, step - rec_step)
            rec_step = step
            for j, k in _pairs(n):
                row += [_fmt(rec_rho[j, k].real), _fmt(rec_rho[j, k].imag)]
        for j in range(n):
            row += [_fmt(mean[j].real), _fmt(mean[j].imag)]
        row += [_fmt(x) for x in mean_se]
        if with_mean:
            mean_vec = exact_mean_recursion(mean_vec, h_op, p, step - mean_step)
            mean_step = step
            for j in range(n):
                row += [_fmt(mean_vec[j].real), _fmt(mean_vec[j].imag)]
        row += [_fmt(np.trace(rho).real)]
        for label, a in ops.items():
            value, se = acc.observable(label)
            oracle = np.sum(a * liou.T).real
            row += [_fmt(value.real), _fmt(value.imag), _fmt(se), _fmt(oracle)]
        rows.append(row)

    final = result.final
    rho_hat = final.raw_density()
    rho_hat = 0.5 * (rho_hat + rho_hat.conj().T)
    rho_se = final.density_standard_error() if final.count >= 2 else np.full((n, n), np.nan)
    mean_se_f = final.mean_standard_error() if final.count >= 2 else np.full(n, np.nan)
    reports = cell_reports(
        rho_hat, rho_se, liou, rec_rho if with_rec else None,
        final.raw_mean(), mean_se_f, mean_vec if with_mean else None,
        tau, s.k_sigma, s.c_bias,
    )
    return CellResult(
        index=index, tau=tau, gamma=gamma, header=header, rows=rows,
        rho=rho_hat, rho_se=rho_se, liouville=liou,
        recursion=rec_rho if with_rec else None,
        mean=final.raw_mean(), mean_se=mean_se_f,
        mean_oracle=mean_vec if with_mean else None,
        norm_drift=result.norm_drift, trajectories=final.count, reports=reports,
    )


def cell_reports(rho, rho_se, liou, rec, mean, mean_se, mean_oracle, tau, k, c_bias):
    reports = {"liouville": compare_to_oracle(rho, liou, rho_se, tau=tau, k=k, c_bias=c_bias)}
    if rec is not None:
        reports["recursion"] = compare_to_oracle(rho, rec, rho_se, tau=tau, k=k, c_bias=0.0)
    if mean_oracle is not None:
        err = np.abs(mean - mean_oracle)
        reports["mean"] = {
            "max_error": float(err.max()),
            "max_se": float(np.max(mean_se)),
            "pass": bool(np.all(err <= k * mean_se)),
        }
    return reports


def _cell_csv(s: Scenario, cell: CellResult, scenario_hash):
    buf = io.StringIO()
    buf.write("# stochwave cell output\n")
    buf.write(f"# scenario_hash: {scenario_hash}\n")
    buf.write(f"# cell: {cell.index}\n")
    buf.write(f"# tau: {_fmt(cell.tau)}\n")
    buf.write(f"# gamma: {_fmt(cell.gamma)}\n")
    buf.write(f"# trajectories: {cell.trajectories}\n")
    buf.write(f"# norm_drift: {_fmt(cell.norm_drift)}\n")
    buf.write(f"# k_sigma: {_fmt(s.k_sigma)}\n")
    buf.write(f"# c_bias: {_fmt(s.c_bias)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cell.header)
    writer.writerows(cell.rows)
    return buf.getvalue()


COMPARISON_HEADER = [
    "cell", "tau", "gamma", "trajectories", "norm_drift", "trace", "trace_error",
    "liouville_frobenius", "liouville_max_element", "liouville_se_scale", "liouville_pass",
    "recursion_frobenius", "recursion_max_element", "recursion_pass",
    "mean_max_error", "mean_max_se", "mean_pass",
]


def comparison_row(cell: CellResult):
    lio = cell.reports["liouville"]
    rec = cell.reports.get("recursion")
    mean = cell.reports.get("mean")
    return [
        str(cell.index), _fmt(cell.tau), _fmt(cell.gamma), str(cell.trajectories),
        _fmt(cell.norm_drift), _fmt(np.trace(cell.rho).real), _fmt(lio.trace_error),
        _fmt(lio.frobenius_error), _fmt(lio.max_element_error), _fmt(lio.standard_error_scale),
        str(lio.pass_),
        _fmt(rec.frobenius_error) if rec else "", _fmt(rec.max_element_error) if rec else "",
        str(rec.pass_) if rec else "",
        _fmt(mean["max_error"]) if mean else "", _fmt(mean["max_se"]) if mean else "",
        str(mean["pass"]) if mean else "",
    ]


GAMMA_HEADER = ["tau", "gamma_a", "gamma_b", "max_difference", "max_ratio", "pass"]


def gamma_invariance_rows(cells, k=4.0):
    """Pairwise comparison of density estimates across gamma at equal tau."""
    rows = []
    by_tau = {}
    for c in cells:
        by_tau.setdefault(c.tau, []).append(c)
    for tau, group in by_tau.items():
        for a, b in combinations(group, 2):
            diff = np.abs(a.rho - b.rho)
            comb = np.sqrt(a.rho_se**2 + b.rho_se**2)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(diff == 0, 0.0, diff / comb)
            rows.append([
                _fmt(tau), _fmt(a.gamma), _fmt(b.gamma), _fmt(diff.max()),
                _fmt(np.max(ratio)), str(bool(np.all(diff <= k * comb))),
            ])
    return rows


def _table(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def run_scenario(s: Scenario, threads=1, output=None):
    """Execute every sweep cell and write the run directory; returns the manifest."""
    out = Path(output if output is not None else s.output_directory)
    scenario_hash = s.hash()
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        cells = []
        grid = [(t, g) for t in s.taus for g in s.gammas]
        for i, (tau, gamma) in enumerate(grid):
            log.info("cell %d: tau=%g gamma=%g", i, tau, gamma)
            cells.append(run_cell(s, i, tau, gamma, threads=threads))

        def write(name, text):
            path = out / name
            path.write_text(text)
            written.append(path)

        write("scenario.json", json.dumps(s.semantic_dict(), sort_keys=True, indent=2) + "\n")
        for cell in cells:
            write(cell.filename, _cell_csv(s, cell, scenario_hash))
        write("comparison.csv", _table(COMPARISON_HEADER, [comparison_row(c) for c in cells]))
        if len(s.gammas) > 1:
            write("gamma_invariance.csv", _table(GAMMA_HEADER, gamma_invariance_rows(cells, s.k_sigma)))
        manifest = RunManifest(
            scenario_hash=scenario_hash,
            engine_version=__version__,
            timestamp=datetime.now(timezone.utc).isoformat(),
            cells=[{"cell": c.index, "tau": c.tau, "gamma": c.gamma, "file": c.filename} for c in cells],
            files=[p.name for p in written] + ["manifest.json"],
        )
        write("manifest.json", json.dumps(manifest.as_dict(), indent=2) + "\n")
    except Exception:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return manifest


# -- reading run directories --------------------------------------------------


def read_cell(path):
    """Parse a cell CSV into ``(meta, header, rows)`` with float rows."""
    meta = {}
    lines = Path(path).read_text().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            if ":" in line:
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
        else:
            body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    rows = [[float(x) for x in r] for r in reader]
    return meta, header, rows


def _matrix(header, row, prefix, n, parts=("re", "im")):
    col = {name: i for i, name in enumerate(header)}
    m = np.zeros((n, n), dtype=complex)
    for j, k in _pairs(n):
        if parts:
            m[j, k] = row[col[f"{prefix}_{j}_{k}_re"]] + 1j * row[col[f"{prefix}_{j}_{k}_im"]]
        else:
            m[j, k] = row[col[f"{prefix}_{j}_{k}"]]
    return m


def _vector(header, row, prefix, n, parts=True):
    col = {name: i for i, name in enumerate(header)}
    if parts:
        return np.array([row[col[f"{prefix}_{j}_re"]] + 1j * row[col[f"{prefix}_{j}_im"]] for j in range(n)])
    return np.array([row[col[f"{prefix}_{j}"]] for j in range(n)])


def compare_run(run_dir):
    """Recompute comparison reports from stored cell files.

    Returns a list of ``(cell_file, meta, reports)``.
    """
    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / "manifest.json").read_text())
    out = []
    for entry in manifest["cells"]:
        meta, header, rows = read_cell(run_dir / entry["file"])
        n = int(round(np.sqrt(sum(1 for h in header if h.startswith("se_")))))
        final = rows[-1]
        rho = _matrix(header, final, "rho", n)
        se = _matrix(header, final, "se", n, parts=()).real
        liou = _matrix(header, final, "liouville", n)
        rec = _matrix(header, final, "recursion", n) if "recursion_0_0_re" in header else None
        mean = _vector(header, final, "mean", n)
        mean_se = _vector(header, final, "mean_se", n, parts=False).real
        mean_oracle = _vector(header, final, "mean_oracle", n) if "mean_oracle_0_re" in header else None
        reports = cell_reports(
            rho, se, liou, rec, mean, mean_se, mean_oracle,
            float(meta["tau"]), float(meta["k_sigma"]), float(meta["c_bias"]),
        )
        out.append((entry["file"], meta, reports))
    return out


def all_pass(reports):
    ok = True
    for name, rep in reports.items():
        ok &= rep["pass"] if isinstance(rep, dict) else rep.pass_
    return bool(ok)
