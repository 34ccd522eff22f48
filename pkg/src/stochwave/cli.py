"""Command line interface: ``stochwave run|check|compare|report``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .runner import all_pass, compare_run, run_scenario
from .scenario import ScenarioError, apply_overrides, load_scenario

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_COMPARISON = 3


def _add_overrides(p):
    p.add_argument("--seed", type=int, help="override master_seed")
    p.add_argument("--trajectories", type=int, help="override trajectory count")
    p.add_argument("--tau", type=float, help="override tau (drops any tau sweep)")
    p.add_argument("--gamma", type=float, help="override gamma (drops any gamma sweep)")
    p.add_argument("--threads", type=int, default=1, help="worker threads (does not change results)")
    p.add_argument("--output", help="override output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="stochwave", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a scenario")
    run.add_argument("scenario")
    _add_overrides(run)
    check = sub.add_parser("check", help="validate a scenario without running it")
    check.add_argument("scenario")
    _add_overrides(check)
    compare = sub.add_parser("compare", help="recompute comparison reports of a run directory")
    compare.add_argument("run_dir")
    report = sub.add_parser("report", help="summarize a run directory")
    report.add_argument("run_dir")
    return parser


def _load(args):
    s = load_scenario(args.scenario)
    return apply_overrides(
        s, seed=args.seed, trajectories=args.trajectories, tau=args.tau, gamma=args.gamma, output=args.output
    )


def cmd_check(args):
    s = _load(args)
    cells = len(s.taus) * len(s.gammas)
    print(f"ok: {args.scenario} ({s.model.name}, n={s.model.basis.size}, {cells} cell(s), hash {s.hash()[:12]})")
    return EXIT_OK


def cmd_run(args):
    s = _load(args)
    if args.threads < 1:
        raise ScenarioError("--threads", "must be at least 1")
    manifest = run_scenario(s, threads=args.threads)
    print(f"wrote {len(manifest.files)} files to {s.output_directory}")
    return EXIT_OK


def cmd_compare(args):
    results = compare_run(args.run_dir)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["file", "oracle", "frobenius_error", "max_element_error", "trace_error", "pass"])
    ok = True
    for name, _, reports in results:
        for oracle, rep in reports.items():
            if isinstance(rep, dict):
                writer.writerow([name, oracle, "", rep["max_error"], "", rep["pass"]])
            else:
                writer.writerow([name, oracle, rep.frobenius_error, rep.max_element_error, rep.trace_error, rep.pass_])
        ok &= all_pass(reports)
    return EXIT_OK if ok else EXIT_COMPARISON


def _read_table(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def cmd_report(args):
    run_dir = Path(args.run_dir)
    manifest = json.loads((run_dir / "manifest.json").read_text())
    rows = _read_table(run_dir / "comparison.csv")
    print(f"run {run_dir}  scenario {manifest['scenario_hash'][:12]}  engine {manifest['engine_version']}")
    cols = [
        ("cell", "cell"), ("tau", "tau"), ("gamma", "gamma"), ("N", "trajectories"),
        ("norm_drift", "norm_drift"), ("trace_err", "trace_error"),
        ("frob_liouville", "liouville_frobenius"), ("pass_L", "liouville_pass"),
        ("frob_recursion", "recursion_frobenius"), ("pass_R", "recursion_pass"),
        ("pass_mean", "mean_pass"),
    ]
    table = [[title for title, _ in cols]]
    for r in rows:
        table.append([_short(r[key]) for _, key in cols])
    _print_table(table)
    gi = run_dir / "gamma_invariance.csv"
    if gi.exists():
        print("\ngamma invariance")
        g_rows = _read_table(gi)
        table = [["tau", "gamma_a", "gamma_b", "max_diff", "max_ratio", "pass"]]
        for r in g_rows:
            table.append([_short(r[k]) for k in ("tau", "gamma_a", "gamma_b", "max_difference", "max_ratio", "pass")])
        _print_table(table)
    return EXIT_OK


def _short(value):
    try:
        return f"{float(value):.4g}"
    except ValueError:
        return value if value else "-"


def _print_table(table):
    widths = [max(len(str(row[i])) for row in table) for i in range(len(table[0]))]
    for row in table:
        print("  ".join(str(v).rjust(w) for v, w in zip(row, widths)))


COMMANDS = {"run": cmd_run, "check": cmd_check, "compare": cmd_compare, "report": cmd_report}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
