"""Command line entry point: ``ocoswitch {run,verify,adversary,opt,spectral}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import spectral as sp
from .adversary import RECIPES, build_recipe
from .errors import OcoSwitchError
from .harness import ExperimentConfig, make_report, run_experiment, verify, verify_experiment
from .offline_opt import solve_opt
from .online_solvers import SOLVER_KINDS, SolverSpec, run_solver


def _print_json(obj: Any) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.out_dir:
        cfg.out_dir = Path(args.out_dir)
    reports = run_experiment(cfg)
    _print_json([r.summary() for r in reports])
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.out_dir:
        cfg.out_dir = Path(args.out_dir)
    _, rows, status = verify_experiment(cfg)
    failed = [r for r in rows if r["mandatory"] and not r["satisfied"]]
    for r in failed:
        sys.stderr.write(f"FAIL {r['instance_id']} {r['algorithm']} {r['name']}: "
                         f"measured={r['measured']!r} theoretical={r['theoretical']!r}\n")
    sys.stdout.write(f"{len(rows)} checks, {len(failed)} mandatory failures\n")
    return status


def _cmd_adversary(args: argparse.Namespace) -> int:
    params: dict[str, Any] = {}
    for key in ("mu", "ell", "theta"):
        if getattr(args, key) is not None:
            params[key] = getattr(args, key)
    if args.T is not None:
        params["T"] = args.T
    if args.Tprime is not None:
        params["Tprime"] = args.Tprime
    if args.d is not None:
        params["d"] = args.d
    inst = build_recipe(args.name, params)
    opt = solve_opt(inst)
    out = []
    status = 0
    for kind in args.solver:
        traj = run_solver(inst, SolverSpec(kind))
        rep = make_report(inst, traj, opt, args.name)
        st = verify(inst, [rep])[1]
        status = max(status, st)
        out.append(rep.summary())
    _print_json(out)
    return status


def _cmd_opt(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig.load(args.config)
    out = []
    for inst_id, inst in cfg.instances:
        sol = solve_opt(inst, args.method or cfg.opt_method, **cfg.opt_options)
        out.append({"instance_id": inst_id, "method": sol.method, "objective": sol.objective,
                    "residual": sol.residual, "verified": sol.verified,
                    "actions": sol.trajectory.actions.tolist()})
    _print_json(out)
    return 0


def _cmd_spectral(args: argparse.Namespace) -> int:
    T, mu = args.T, args.mu
    B = sp.b_matrix(T)
    A = sp.a_matrix(T, mu)
    doc: dict[str, Any] = {
        "T": T,
        "mu": mu,
        "gershgorin_B": sp.gershgorin_interval(B),
        "gershgorin_A": sp.gershgorin_interval(A),
        "dominance_gap_H": sp.dominance_gap(sp.h_matrix(T, mu)),
    }
    if T <= 512:
        eb = sp.eigs_tridiag(B)
        doc["eigs_B"] = eb.tolist()
        doc["eigs_A_minus_mu"] = (sp.eigs_tridiag(A) - mu).tolist()
        doc["combined_max_eig"] = float(np.linalg.eigvalsh(sp.combined_matrix(T, mu)).max())
        doc["combined_bound"] = 1.0 + mu / (mu + 4.0)
    try:
        closed = sp.h_inverse_closed_form(T, mu)
        direct = sp.h_inverse_by_solves(T, mu)
        doc["h_inverse"] = {
            "max_abs_diff": float(np.max(np.abs(closed - direct))),
            "min_entry": float(closed.min()),
            "max_row_sum": float(np.abs(closed).sum(axis=1).max()),
            "min_row_deficit": float(sp.h_inverse_row_deficits(T, mu).min()),
        }
    except OcoSwitchError as exc:
        doc["h_inverse"] = {"error": str(exc)}
    _print_json(doc)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ocoswitch", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run solvers and write rounds.csv and summary.json")
    r.add_argument("config")
    r.add_argument("--out-dir")
    r.set_defaults(func=_cmd_run)

    v = sub.add_parser("verify", help="run and check every bound; nonzero exit on failure")
    v.add_argument("config")
    v.add_argument("--out-dir")
    v.set_defaults(func=_cmd_verify)

    a = sub.add_parser("adversary", help="build a lower-bound instance and report costs")
    a.add_argument("--name", required=True, choices=RECIPES)
    a.add_argument("--mu", type=float)
    a.add_argument("--ell", type=float)
    a.add_argument("--theta", type=float)
    a.add_argument("--T", type=int)
    a.add_argument("--Tprime", type=int)
    a.add_argument("--d", type=int)
    a.add_argument("--solver", action="append", choices=SOLVER_KINDS)
    a.set_defaults(func=_cmd_adversary)

    o = sub.add_parser("opt", help="solve the offline optimum for each configured instance")
    o.add_argument("config")
    o.add_argument("--method")
    o.set_defaults(func=_cmd_opt)

    s = sub.add_parser("spectral", help="dump spectral checks for B, A and H")
    s.add_argument("T", type=int)
    s.add_argument("mu", type=float)
    s.set_defaults(func=_cmd_spectral)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "solver", None) is None and args.command == "adversary":
        args.solver = ["omgd"]
    try:
        return int(args.func(args))
    except (OcoSwitchError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
