"""Command line: `python -m app.cli <command> [flags]`.

Every command prints one JSON document on stdout and, with --out, writes it
to that path as well. Exit codes: 0 ok, 1 a failed selftest, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .core import config
from .core.action import (
    PHI1_WEIGHT_SOURCES,
    action,
    action_closed_form,
    fundamental_unitary,
    gauge_shift_check,
    index_pairing,
)
from .core.checks import build_ledger, dlsv_report, run_selftest
from .core.critical import StationaryProblem, find_stationary, find_stationary_multi, write_trajectory
from .core.forms import FormError, MatForm, random_form
from .core.representation import Truncation, TruncationError, poly_operator, relation_residual
from .core.residues import ResidueError, residue_report, shell_traces, write_shell_csv
from .core.symbols import ActionCoefficients, sigma_q
from .core.wordexpr import WordSyntaxError, parse_poly

log = logging.getLogger(__name__)


def _trunc(cfg: config.Config) -> Truncation:
    return Truncation(cfg.m_max, cfg.guard)


def _emit(data: dict[str, Any], out: str | None) -> None:
    text = json.dumps(data, indent=2, sort_keys=False)
    print(text)
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n", encoding="utf-8")
        log.info("wrote %s", path)


# ─── Commands ───

def cmd_selftest(cfg: config.Config, args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    report = run_selftest(cfg, quick=args.quick, only=tuple(args.only) if args.only else None)
    return report.to_json(), 0 if report.passed else 1


def cmd_relations(cfg: config.Config, args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    res = relation_residual(cfg.q, _trunc(cfg))
    return {"q": cfg.q, "m_max": cfg.m_max, "guard": cfg.guard, "residuals": res}, 0


def cmd_residues(cfg: config.Config, args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    x = parse_poly(args.expr)
    op = poly_operator(x, cfg.q, _trunc(cfg))
    series = shell_traces(op, args.expr)
    if args.csv:
        write_shell_csv(series, args.csv)
    report = residue_report(series, geometric=cfg.q > 0)
    out = report.to_json()
    out["expr"] = args.expr
    out["symbol_mean"] = [sigma_q(x).mean().real, sigma_q(x).mean().imag]
    return out, 0


def cmd_action(cfg: config.Config, args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    data = json.loads(Path(args.path).read_text(encoding="utf-8"))
    if "terms" in data:
        A = MatForm.from_json(data)
        br = action(A, cfg.q, cfg.k_level, cfg.phi1_route, _trunc(cfg), cfg.phi0_route)
    else:
        c = ActionCoefficients.from_json(data)
        br = action_closed_form(c, cfg.q, cfg.k_level, args.phi1_weights, args.chi_constant, args.rho_bound, cfg.m_max)
    return br.to_json(), 0


def cmd_verify_gauge(cfg: config.Config, args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    rng = np.random.default_rng(cfg.seed)
    U = fundamental_unitary(cfg.q)
    trunc = _trunc(cfg)
    index = index_pairing(U, cfg.q, trunc, cocycle=False).numeric_index
    runs = []
    for _ in range(args.count):
        A = (random_form(rng, 1, 2, n_terms=2, max_len=1) * args.scale).hermitize()
        rep = gauge_shift_check(A, U, cfg.q, cfg.k_level, trunc, cfg.phi1_route, index=index)
        runs.append(rep.to_json())
    worst = max((r["relative"] for r in runs), default=0.0)
    if worst > cfg.tolerances.gauge_shift:
        log.warning("gauge shift off by %.3g of 2 pi k; see the per-cochain columns", worst)
    return {"q": cfg.q, "index": index, "max_relative": worst, "runs": runs}, 0


def cmd_index(cfg: config.Config, args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    r = index_pairing(fundamental_unitary(cfg.q), cfg.q, _trunc(cfg), args.threshold, cfg.phi1_route)
    return r.to_json(), 0


def cmd_optimize(cfg: config.Config, args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    p = StationaryProblem.build(
        cfg.q, cfg.k_level, cfg.K, args.phi1_weights, args.chi_constant, args.rho_bound, cfg.m_max,
        constraint=args.constraint, include_cubic=not args.no_cubic,
    )
    if args.starts > 1:
        reports = find_stationary_multi(p, args.starts, cfg.seed, args.method, args.scale, max_iter=args.max_iter)
    else:
        init = np.random.default_rng(cfg.seed).normal(scale=args.scale, size=p.n_vars)
        reports = [find_stationary(p, init, args.method, max_iter=args.max_iter)]
    traj_dir = Path(args.trajectory_dir) if args.trajectory_dir else cfg.out_dir / "trajectories"
    paths = [str(write_trajectory(r, traj_dir / f"start_{i}.csv")) for i, r in enumerate(reports)]
    return {"problem": p.to_json(), "reports": [r.to_json() for r in reports], "trajectories": paths}, 0


def cmd_ledger(cfg: config.Config, args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    return {"ledger": [e.to_json() for e in build_ledger(cfg)]}, 0


def cmd_dlsv_residues(cfg: config.Config, args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    return dlsv_report(args.j_max), 0


COMMANDS: dict[str, Callable[[config.Config, argparse.Namespace], tuple[dict[str, Any], int]]] = {
    "selftest": cmd_selftest,
    "relations": cmd_relations,
    "residues": cmd_residues,
    "action": cmd_action,
    "verify-gauge": cmd_verify_gauge,
    "index": cmd_index,
    "optimize": cmd_optimize,
    "ledger": cmd_ledger,
    "dlsv-residues": cmd_dlsv_residues,
}


# ─── Parser ───

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", type=float)
    common.add_argument("--m-max", dest="m_max", type=int)
    common.add_argument("--guard", type=int)
    common.add_argument("--K", dest="K", type=int)
    common.add_argument("--level", dest="k_level", type=int)
    common.add_argument("--N", dest="N", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--route", dest="phi1_route", choices=("symbolic", "cm", "cocycle"))
    common.add_argument("--config", help="JSON file with Config fields")
    common.add_argument("--out", help="also write the JSON output here")

    parser = argparse.ArgumentParser(prog="suq2cs", description=config.APP_TITLE)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("selftest", parents=[common], help="acceptance checks and the discrepancy ledger")
    p.add_argument("--quick", action="store_true", help="run every check at the configured m_max")
    p.add_argument("--only", nargs="+", metavar="CHECK")

    sub.add_parser("relations", parents=[common], help="defining-relation residuals")

    p = sub.add_parser("residues", parents=[common], help="residues of a word expression")
    p.add_argument("expr")
    p.add_argument("--csv", help="write the shell traces as CSV")

    closed_form = argparse.ArgumentParser(add_help=False)
    closed_form.add_argument("--phi1-weights", choices=PHI1_WEIGHT_SOURCES, default="exact")
    closed_form.add_argument("--chi-constant", choices=("trace", "literal"), default="trace")
    closed_form.add_argument("--rho-bound", choices=("symmetric", "literal"), default="symmetric")

    p = sub.add_parser("action", parents=[common, closed_form], help="action of a coefficient or form JSON")
    p.add_argument("path")

    p = sub.add_parser("optimize", parents=[common, closed_form], help="stationary points")
    p.add_argument("--method", choices=("newton", "gd"), default="newton")
    p.add_argument("--starts", type=int, default=1)
    p.add_argument("--scale", type=float, default=0.1)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--constraint", choices=("none", "symmetric"), default="none")
    p.add_argument("--no-cubic", action="store_true")
    p.add_argument("--trajectory-dir")

    p = sub.add_parser("verify-gauge", parents=[common], help="gauge shift against 2 pi k Index")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--scale", type=float, default=0.05)

    p = sub.add_parser("index", parents=[common], help="index pairing of the fundamental unitary")
    p.add_argument("--threshold", type=float)

    sub.add_parser("ledger", parents=[common], help="discrepancy ledger")

    p = sub.add_parser("dlsv-residues", parents=[common], help="residues for the second Dirac operator")
    p.add_argument("--j-max", type=int, default=40)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=config.LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k, None) for k in ("q", "m_max", "guard", "K", "k_level", "N", "seed", "phi1_route")}
    try:
        cfg = config.load_config(args.config, **overrides)
        data, code = COMMANDS[args.command](cfg, args)
    except (config.ConfigError, WordSyntaxError, TruncationError, FormError, ResidueError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(data, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
