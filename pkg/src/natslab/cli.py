"""Command-line front end.

Structured reports are written as JSON, per-sample and per-site tables as
CSV; every number is printed with 17 significant digits.  ``--out -`` writes
to stdout.  Exit status is 0 on success, 2 for invalid input (the message
names the offending option) and 1 for unexpected internal failures.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NatslabError
from .microcanonical import (
    build_amc,
    condition1_defect,
    condition2_defect,
    subspace_from_dict,
    subspace_to_dict,
    theorem1_report,
)
from .nats import build_nats, expectations, fit_potentials, log_partition
from .qops import ChargeFamily, DensityMatrix, kron_all, load_operator, operator_to_dict
from .resource import (
    extractable_work_bound,
    passivity_check,
    payoff_operator,
    second_laws_check,
    total_charges,
    work_extraction_search,
)
from .typicality import typicality_trial


class UsageError(Exception):
    """Invalid command-line input; the message names the offending option."""


# --- number formatting ------------------------------------------------------------

def fmt(x) -> str:
    """17-significant-digit rendering used for every number in CSV and JSON output."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x) + 0.0  # folds -0.0 into 0.0
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits (non-finite values as ``NaN``/``Infinity``)."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (bool, np.bool_, int, np.integer, float, np.floating)):
        return fmt(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(x if isinstance(x, str) else fmt(x) for x in row) + "\n")
    return buf.getvalue()


def emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(out).write_text(text, encoding="utf-8")


# --- input parsing -----------------------------------------------------------------

def _field(option: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except UsageError:
        raise
    except (OSError, ValueError, TypeError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"{option}: {exc}") from exc


def parse_floats(text: str) -> np.ndarray:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if not parts:
        raise ValueError("expected a comma-separated list of numbers")
    return np.array([float(p) for p in parts])


def parse_alpha_grid(text: str) -> np.ndarray:
    """``start:step:stop`` (inclusive) or a comma-separated list."""
    if ":" in text:
        start, step, stop = (float(p) for p in text.split(":"))
        if step <= 0 or stop < start:
            raise ValueError("grid needs step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        grid = np.round(start + step * np.arange(count), 12)
    else:
        grid = parse_floats(text)
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("alpha values must be non-negative and strictly ascending")
    return grid


def load_family(paths: list[str]) -> ChargeFamily:
    ops = [load_operator(p) for p in paths]
    return ChargeFamily(ops, labels=[Path(p).stem for p in paths])


def load_state(path: str) -> DensityMatrix:
    return load_operator(path, cls=DensityMatrix)


def load_subspace(path: str):
    with open(path, encoding="utf-8") as fh:
        return subspace_from_dict(json.load(fh))


def _positive_int(option: str, value: int) -> int:
    if value < 1:
        raise UsageError(f"{option}: must be a positive integer, got {value}")
    return value


@dataclass
class Scenario:
    """Validated inputs shared by the subcommands."""

    charges: ChargeFamily | None = None
    values: np.ndarray | None = None
    mu: np.ndarray | None = None
    copies: int | None = None
    eta: float | None = None
    eta_prime: float | None = None
    delta_prime: float | None = None
    alpha_grid: np.ndarray | None = None
    samples: int | None = None
    seed: int = 0
    out: str = "-"


def scenario_from_args(args) -> Scenario:
    sc = Scenario(seed=args.seed, out=args.out)
    if getattr(args, "charges", None):
        sc.charges = _field("--charges", load_family, args.charges)
    if getattr(args, "values", None) is not None:
        sc.values = _field("--values", parse_floats, args.values)
        if sc.charges is not None and sc.values.size != len(sc.charges):
            raise UsageError(f"--values: expected {len(sc.charges)} numbers, got {sc.values.size}")
    if getattr(args, "mu", None) is not None:
        sc.mu = _field("--mu", parse_floats, args.mu)
        if sc.charges is not None and sc.mu.size != len(sc.charges):
            raise UsageError(f"--mu: expected {len(sc.charges)} numbers, got {sc.mu.size}")
    if getattr(args, "copies", None) is not None:
        sc.copies = _positive_int("--copies", args.copies)
    for name in ("eta", "eta_prime", "delta_prime"):
        val = getattr(args, name, None)
        if val is not None:
            option = "--" + name.replace("_", "-")
            if name == "eta" and not 0 < val <= 1:
                raise UsageError(f"{option}: must lie in (0, 1], got {val}")
            if not 0 <= val <= 1:
                raise UsageError(f"{option}: must lie in [0, 1], got {val}")
            setattr(sc, name, val)
    if getattr(args, "alpha_grid", None) is not None:
        sc.alpha_grid = _field("--alpha-grid", parse_alpha_grid, args.alpha_grid)
    if getattr(args, "samples", None) is not None:
        sc.samples = _positive_int("--samples", args.samples)
    return sc


def _require(sc: Scenario, *names: str) -> None:
    for name in names:
        if getattr(sc, name) is None:
            raise UsageError(f"--{name.replace('_', '-')}: required")


# --- subcommands ---------------------------------------------------------------------

def cmd_nats_fit(args) -> int:
    sc = scenario_from_args(args)
    _require(sc, "charges", "values")
    if args.tol <= 0:
        raise UsageError("--tol: must be positive")
    params = _field("--values", fit_potentials, sc.charges, sc.values, args.tol)
    report = {
        "labels": list(sc.charges.labels),
        "targets": sc.values,
        "mu": params.mu,
        "beta": params.beta,
        "chemical_potentials": params.mu[1:] / params.mu[0] if params.mu[0] != 0 else None,
        "log_partition": params.log_partition,
        "residuals": params.residuals,
        "max_residual": params.max_residual,
        "iterations": params.iterations,
    }
    emit(to_json(report) + "\n", sc.out)
    return 0


def cmd_nats_build(args) -> int:
    sc = scenario_from_args(args)
    _require(sc, "charges", "mu")
    state = build_nats(sc.charges, sc.mu)
    report = {
        "labels": list(sc.charges.labels),
        "mu": sc.mu,
        "log_partition": log_partition(sc.charges, sc.mu),
        "expectations": expectations(state, sc.charges),
        "state": operator_to_dict(state),
    }
    emit(to_json(report) + "\n", sc.out)
    return 0


def cmd_amc_build(args) -> int:
    sc = scenario_from_args(args)
    _require(sc, "charges", "values", "copies", "eta")
    sub = _field("--values", build_amc, sc.charges, sc.values, sc.copies, sc.eta, seed=sc.seed)
    data = subspace_to_dict(sub, sc.charges)
    data["condition1_defect"] = condition1_defect(sub, sc.charges)
    emit(to_json(data, indent=1) + "\n", sc.out)
    return 0


def _subspace_and_family(args):
    sub, family = _field("--subspace", load_subspace, args.subspace)
    if args.charges:
        family = _field("--charges", load_family, args.charges)
    if family is None:
        raise UsageError("--charges: required (the subspace file embeds no charges)")
    if len(family) != sub.targets.size:
        raise UsageError(f"--charges: subspace has {sub.targets.size} targets but {len(family)} charges were given")
    if family.site_dim != sub.site_dim:
        raise UsageError("--charges: site dimension differs from the subspace's")
    return sub, family


def cmd_amc_verify(args) -> int:
    sc = scenario_from_args(args)
    _require(sc, "eta_prime", "delta_prime")
    sub, family = _subspace_and_family(args)
    delta = condition1_defect(sub, family)
    bounds = condition2_defect(sub, family, sc.eta_prime, sc.delta_prime, seed=sc.seed)
    report = theorem1_report(sub, family, delta=delta)
    if args.format == "csv":
        rows = [
            [site, report.site_relative_entropies[site], report.site_trace_distances[site]]
            for site in range(sub.n_copies)
        ]
        emit(csv_text(["site", "relative_entropy", "trace_distance"], rows), sc.out)
        return 0
    out = {
        "provenance": sub.provenance,
        "n_copies": sub.n_copies,
        "dim": sub.dim,
        "eta": sub.eta,
        "eta_prime": sc.eta_prime,
        "delta_prime": sc.delta_prime,
        "condition1_defect": delta,
        "condition2_primal_lower": bounds.primal_lower,
        "condition2_dual_upper": bounds.dual_upper,
        "condition2_multipliers": bounds.multipliers,
        "eps_num": sub.eps_num,
    }
    out.update(report.as_dict())
    emit(to_json(out) + "\n", sc.out)
    return 0


def cmd_typicality_run(args) -> int:
    sc = scenario_from_args(args)
    _require(sc, "samples")
    if args.threads < 1:
        raise UsageError("--threads: must be a positive integer")
    sub, family = _subspace_and_family(args)
    targets = sub.targets if sc.values is None else sc.values
    if targets.size != len(family):
        raise UsageError(f"--values: expected {len(family)} numbers, got {targets.size}")
    est = _field("--values", typicality_trial, sub, family, targets, sc.samples, sc.seed, threads=args.threads)
    rows = [[int(r[0]), int(r[1]), r[2], r[3]] for r in est.rows]
    emit(csv_text(["sample", "site", "dist_reduced", "dist_nats"], rows), sc.out)
    if args.summary:
        summary = {
            "samples": est.samples,
            "seed": est.seed,
            "mean_trace_distance_to_reduced": est.mean_trace_distance_to_reduced,
            "std_error_reduced": est.std_error_reduced,
            "mean_avg_distance_to_nats": est.mean_avg_distance_to_nats,
            "bound_canonical": est.bound_canonical,
            "bound_combined": est.bound_combined,
            "theta_surrogate": est.theta_surrogate,
            "within_canonical_bound": est.within_canonical_bound,
        }
        Path(args.summary).write_text(to_json(summary) + "\n", encoding="utf-8")
    return 0


def _state_for(option: str, path: str, family: ChargeFamily) -> DensityMatrix:
    state = _field(option, load_state, path)
    if state.dim != family.site_dim:
        raise UsageError(f"{option}: state dimension {state.dim} differs from charge dimension {family.site_dim}")
    return state


def cmd_resource_second_laws(args) -> int:
    sc = scenario_from_args(args)
    _require(sc, "charges", "mu", "alpha_grid")
    if sc.mu[0] <= 0:
        raise UsageError("--mu: the first entry (inverse temperature) must be positive")
    rho = _state_for("--rho", args.rho, sc.charges)
    sigma = _state_for("--sigma", args.sigma, sc.charges)
    verdict = second_laws_check(rho, sigma, sc.charges, sc.mu, sc.alpha_grid)
    out = verdict.as_dict()
    out["work_bound"] = extractable_work_bound(rho, sigma, sc.charges, sc.mu, sc.alpha_grid)
    emit(to_json(out) + "\n", sc.out)
    return 0


def cmd_resource_passivity(args) -> int:
    sc = scenario_from_args(args)
    _require(sc, "charges", "mu")
    rho = _state_for("--rho", args.rho, sc.charges)
    res = passivity_check(rho, payoff_operator(sc.charges, sc.mu))
    witness = list(res.witness) if isinstance(res.witness, tuple) else res.witness
    emit(to_json({"passive": res.passive, "witness": witness}) + "\n", sc.out)
    return 0


def cmd_resource_extract(args) -> int:
    sc = scenario_from_args(args)
    _require(sc, "charges", "mu", "copies")
    trials = _positive_int("--trials", args.trials)
    rho = _state_for("--rho", args.rho, sc.charges)
    big = DensityMatrix(kron_all([rho.matrix] * sc.copies), check=False)
    w_total = payoff_operator(sc.charges, sc.mu).on_copies(sc.copies)
    totals = total_charges(sc.charges, sc.copies) if args.conserve else []
    best = work_extraction_search(big, w_total, totals, trials, sc.seed)
    out = {"copies": sc.copies, "trials": trials, "seed": sc.seed, "conserve_totals": args.conserve,
           "best_work": best}
    emit(to_json(out) + "\n", sc.out)
    return 0


# --- parser --------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default="-", help="output path, '-' for stdout (default)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--threads", type=int, default=1, help="maximum worker threads (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="natslab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    top = parser.add_subparsers(dest="command", required=True)

    nats = top.add_parser("nats", help="thermal states with several charges").add_subparsers(dest="action", required=True)
    p = nats.add_parser("fit", help="fit potentials to target charge values")
    p.add_argument("--charges", nargs="+", required=True, metavar="FILE")
    p.add_argument("--values", required=True, help="comma-separated targets, one per charge")
    p.add_argument("--tol", type=float, default=1e-8)
    _common(p)
    p.set_defaults(func=cmd_nats_fit)
    p = nats.add_parser("build", help="thermal state for given potentials")
    p.add_argument("--charges", nargs="+", required=True, metavar="FILE")
    p.add_argument("--mu", required=True, help="comma-separated potentials, one per charge")
    _common(p)
    p.set_defaults(func=cmd_nats_build)

    amc = top.add_parser("amc", help="approximate microcanonical subspaces").add_subparsers(dest="action", required=True)
    p = amc.add_parser("build", help="construct a subspace")
    p.add_argument("--charges", nargs="+", required=True, metavar="FILE")
    p.add_argument("--values", required=True)
    p.add_argument("--copies", type=int, required=True)
    p.add_argument("--eta", type=float, required=True)
    _common(p)
    p.set_defaults(func=cmd_amc_build)
    p = amc.add_parser("verify", help="certify a subspace and report site statistics")
    p.add_argument("--subspace", required=True)
    p.add_argument("--charges", nargs="+", metavar="FILE")
    p.add_argument("--eta-prime", type=float, required=True)
    p.add_argument("--delta-prime", type=float, required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    _common(p)
    p.set_defaults(func=cmd_amc_verify)

    typ = top.add_parser("typicality", help="canonical typicality sampling").add_subparsers(dest="action", required=True)
    p = typ.add_parser("run", help="sample pure states in a subspace")
    p.add_argument("--subspace", required=True)
    p.add_argument("--charges", nargs="+", metavar="FILE")
    p.add_argument("--values", help="targets (default: those stored with the subspace)")
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--summary", help="also write a JSON summary to this path")
    _common(p)
    p.set_defaults(func=cmd_typicality_run)

    res = top.add_parser("resource", help="free energies, passivity and work").add_subparsers(dest="action", required=True)
    p = res.add_parser("second-laws", help="compare free energies of two states")
    p.add_argument("--charges", nargs="+", required=True, metavar="FILE")
    p.add_argument("--mu", required=True)
    p.add_argument("--rho", required=True)
    p.add_argument("--sigma", required=True)
    p.add_argument("--alpha-grid", default="0:0.1:4", help="start:step:stop or comma list (default 0:0.1:4)")
    _common(p)
    p.set_defaults(func=cmd_resource_second_laws)
    p = res.add_parser("passivity", help="test a state for passivity")
    p.add_argument("--charges", nargs="+", required=True, metavar="FILE")
    p.add_argument("--mu", required=True)
    p.add_argument("--rho", required=True)
    _common(p)
    p.set_defaults(func=cmd_resource_passivity)
    p = res.add_parser("extract", help="search for work extraction from copies of a state")
    p.add_argument("--charges", nargs="+", required=True, metavar="FILE")
    p.add_argument("--mu", required=True)
    p.add_argument("--rho", required=True)
    p.add_argument("--copies", type=int, default=1)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--conserve", action="store_true", help="restrict to unitaries conserving every total charge")
    _common(p)
    p.set_defaults(func=cmd_resource_extract)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"natslab: error: {exc}", file=sys.stderr)
        return 2
    except NatslabError as exc:
        print(f"natslab: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort diagnostic
        print(f"natslab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
