"""Command-line front end.

Every subcommand reads an optional JSON config; flags override config values.
Exit codes: 0 success, 2 invalid input, 3 failure during computation.
Tables on stdout are tab-separated.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from . import config as cfgmod
from .acx_models import Trajectory, contraction_report, simulate, supervised_pairs
from .bounds import generalization_report, geometric_moment_constants, moment_condition_check
from .erm import erm_fit
from .experiments import (
    emit_csv,
    emit_replications_csv,
    emit_svg_plot,
    overlay_bounds,
    run_excess_risk_curve,
    write_manifest,
)

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3
HELP_WIDTH = 100

log = logging.getLogger("weakdep_erm")


class _Formatter(argparse.HelpFormatter):
    def __init__(self, prog):
        super().__init__(prog, width=HELP_WIDTH, max_help_position=32)


def _tsv(rows, out=None):
    out = out or sys.stdout
    for row in rows:
        out.write("\t".join(_cell(v) for v in row) + "\n")


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return "NA"
    return str(v)


def _write_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n"
    if path is None:
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    doc = cfgmod.load_config(args.config)
    if args.n is None or args.n < 1:
        raise ValueError("--n must be a positive integer")
    model = cfgmod.build_model(doc)
    burn = args.burn_in if args.burn_in is not None else cfgmod.burn_in(doc)
    if burn < 0:
        raise ValueError("--burn-in must be non-negative")
    traj = simulate(
        model,
        cfgmod.build_covariate(doc),
        cfgmod.build_innovation(cfgmod.section(doc, "innovation")),
        args.n,
        burn_in=burn,
        seed=args.seed,
    )
    if args.out:
        traj.to_csv(args.out)
        _tsv([("rows", len(traj)), ("out", args.out)])
    else:
        _tsv([["t", "y"] + [f"chi_{i + 1}" for i in range(traj.dx)]])
        _tsv([[t, float(traj.y[t])] + [float(v) for v in traj.chi[t]] for t in range(len(traj))])
    return EXIT_OK


def cmd_fit(args) -> int:
    doc = cfgmod.load_config(args.config)
    if args.method is not None:
        doc = cfgmod.override(doc, "predictor", "fit_method", args.method)
    predictor, box = cfgmod.build_predictor(doc)
    loss = cfgmod.build_loss(doc, args.loss)
    traj = Trajectory.from_csv(args.train)
    if traj.dx != predictor.dx:
        raise ValueError(f"{args.train}: trajectory has {traj.dx} covariates, predictor expects {predictor.dx}")
    data = supervised_pairs(traj, predictor.memory)
    result = erm_fit(predictor, box, data, loss, cfgmod.build_fit_config(doc, seed=args.seed))
    out = {"loss": loss.kind, "n": len(data), **result.to_dict()}
    _write_json(out, args.out)
    rows = [(f"theta_{i}", float(v)) for i, v in enumerate(result.theta)]
    rows += [("empirical_risk", result.empirical_risk), ("method", result.method), ("converged", result.converged)]
    rows += [("box_active", result.box_active)]
    _tsv(rows)
    return EXIT_OK


def cmd_bound(args) -> int:
    doc = cfgmod.load_config(args.config)
    for key in ("M", "L", "eta", "n", "mode"):
        doc = cfgmod.override(doc, "bound_constants", key, getattr(args, key))
    if args.as_stated:
        doc = cfgmod.override(doc, "bound_constants", "as_stated", True)
    bc = cfgmod.section(doc, "bound_constants")
    if "n" not in bc:
        raise ValueError("--n is required (or bound_constants.n in the config)")
    constants = cfgmod.build_bound_constants(doc)
    report = generalization_report(
        bc["n"], bc.get("eta", 0.05), bc.get("mode", "slow"), constants, as_stated=bc.get("as_stated", False)
    )
    _write_json(report.to_dict(), args.out)
    _tsv(report.table_rows())
    _tsv([("min_n_satisfied", report.min_n_satisfied), ("warnings", ",".join(report.warnings) or "none")])
    for w in report.warnings:
        log.warning("bound: %s", w)
    return EXIT_OK


def cmd_experiment(args) -> int:
    doc = cfgmod.load_config(args.config)
    scale = "full" if args.full else "desk" if args.desk else None
    config = cfgmod.build_experiment_config(doc, scale=scale, workers=args.workers, seed=args.seed)
    out_cfg = cfgmod.section(doc, "output")
    out_dir = Path(args.out_dir or out_cfg.get("dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    log_y = args.log_y or out_cfg.get("log_y", False)

    result = run_excess_risk_curve(config)
    overlay = overlay_bounds(result)
    csv_path = emit_csv(result, out_dir / out_cfg.get("csv", "excess_risk.csv"))
    emit_replications_csv(result, out_dir / out_cfg.get("replications_csv", "replications.csv"))
    emit_csv(overlay, out_dir / "overlay.csv")
    svg_path = emit_svg_plot(result, out_dir / out_cfg.get("svg", "excess_risk.svg"), log_y=log_y)
    write_manifest(
        result,
        out_dir / out_cfg.get("manifest", "manifest.json"),
        extra={
            "config_document": doc,
            "overlay": {
                "slow_violations": len(overlay.violations("slow")),
                "slow_checked": overlay.checked("slow"),
                "fast_violations": len(overlay.violations("fast")),
                "fast_checked": overlay.checked("fast"),
            },
        },
    )
    _tsv([("loss", "n", "mean_excess", "sd", "reps")])
    _tsv([(p.loss, p.n, p.mean_excess, p.sd, p.reps) for p in result.points])
    log.info("wrote %s and %s", csv_path, svg_path)
    return EXIT_OK


def cmd_check(args) -> int:
    doc = cfgmod.load_config(args.config)
    model = cfgmod.build_model(doc)
    innovation = cfgmod.build_innovation(cfgmod.section(doc, "innovation"))
    contraction = contraction_report(model, cfgmod.build_covariate(doc), innovation.r_norm(2.0))
    dep = cfgmod.build_dependence(doc)
    k_max = args.k_max if args.k_max is not None else cfgmod.section(doc, "dependence").get("k_max", 10)
    if k_max < 0:
        raise ValueError("--k-max must be non-negative")
    decay = cfgmod.moment_decay(doc)
    L1, L2 = dep.L1, dep.L2
    given = cfgmod.section(doc, "dependence")
    if decay.kind == "geometric" and "L1" not in given and "L2" not in given:
        L1, L2 = geometric_moment_constants(decay)
    moment = moment_condition_check(decay, dep.mu, L1, L2, k_max=k_max)
    _write_json(
        {"contraction": contraction.to_dict(), "moment": {"mu": dep.mu, "L1": L1, "L2": L2, **moment.to_dict()}}, args.out
    )
    _tsv([("contraction_total", contraction.total), ("contraction_satisfied", contraction.satisfied)])
    _tsv([("decay", decay.kind), ("mu", dep.mu), ("L1", L1), ("L2", L2)])
    _tsv([("k", "lhs", "rhs", "satisfied")])
    _tsv([(r.k, r.lhs, r.rhs, r.satisfied) for r in moment.rows])
    _tsv([("moment_satisfied", moment.satisfied)])
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weakdep-erm",
        description="Simulate ARX/TARX series, fit ERM predictors and evaluate generalization bounds.",
        formatter_class=_Formatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text, formatter_class=_Formatter)
        p.add_argument("--config", metavar="PATH", help="JSON config file (defaults apply when omitted)")
        p.set_defaults(func=fn)
        return p

    p = add("simulate", cmd_simulate, "simulate a trajectory and write it as CSV")
    p.add_argument("--n", type=int, required=True, help="number of observations kept after burn-in")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--burn-in", type=int, help="discarded warm-up steps (default from config, else 1000)")
    p.add_argument("--out", metavar="PATH", help="output CSV (stdout when omitted)")

    p = add("fit", cmd_fit, "fit the predictor on a trajectory CSV by empirical risk minimisation")
    p.add_argument("--train", metavar="PATH", required=True, help="training trajectory CSV")
    p.add_argument("--out", metavar="PATH", help="write the fit result as JSON")
    p.add_argument("--loss", choices=["absolute", "squared"], help="loss (overrides loss.kind)")
    p.add_argument(
        "--method", choices=["closed_form_least_squares", "nelder_mead", "grid_refine"], help="optimiser"
    )
    p.add_argument("--seed", type=int, default=0, help="seed for random restarts (default 0)")

    p = add("bound", cmd_bound, "evaluate the generalization bound for one sample size")
    p.add_argument("--n", type=int, help="sample size")
    p.add_argument("--eta", type=float, help="confidence parameter in (0, 1); the bound holds w.p. 1 - 2 eta")
    p.add_argument("--mode", choices=["slow", "fast"], help="bound regime (default slow)")
    p.add_argument("--M", type=float, help="sup of the loss over the class")
    p.add_argument("--L", type=float, help="Lipschitz constant of the loss")
    p.add_argument("--as-stated", action="store_true", help="use the alternative eps1' closed form")
    p.add_argument("--out", metavar="PATH", help="write the report as JSON")

    p = add("experiment", cmd_experiment, "run the Monte Carlo excess-risk curve")
    scale = p.add_mutually_exclusive_group()
    scale.add_argument("--desk", action="store_true", help="R=100, n in {100, 400, 1600}")
    scale.add_argument("--full", action="store_true", help="R=500, n = 100, 120, ..., 2000")
    p.add_argument("--workers", type=int, help="worker processes (default from config, else 1)")
    p.add_argument("--seed", type=int, help="base seed (overrides experiment.base_seed)")
    p.add_argument("--out-dir", metavar="DIR", help="output directory (default from config, else .)")
    p.add_argument("--log-y", action="store_true", help="log-scale the y axis of the SVG")

    p = add("check", cmd_check, "report the contraction and moment conditions")
    p.add_argument("--k-max", type=int, help="largest moment order checked (default 10)")
    p.add_argument("--out", metavar="PATH", help="write the report as JSON")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        if getattr(args, "workers", None) is not None and args.workers < 1:
            raise ValueError("--workers must be at least 1")
        if getattr(args, "seed", None) is not None and args.seed < 0:
            raise ValueError("--seed must be non-negative")
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
