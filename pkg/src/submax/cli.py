"""Command-line interface.

Input for the data subcommands is a UTF-8 CSV in long format, one row per
unit, with columns ``set_id``, ``unit_id``, ``treated`` (0/1), either
``response`` or ``time`` and ``event``, and one 0/1 column per modifier named
in ``--covariates``.

Exit codes: 0 success, 2 invalid input or arguments, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import reporting
from .closed import closed_test_study
from .exceptions import NumericalError, ValidationError
from .inference import (
    DEFAULT_ALPHA,
    ScoredStudy,
    default_gamma_grid,
    sensitivity_sweep,
    submax_test,
)
from .mvn import DEFAULT_TARGET_ERROR
from .power import (
    FavorableAlternative,
    amplify,
    design_sensitivity,
    design_sensitivity_numeric,
    power_row,
)
from .simulation import METHODS as SIM_METHODS
from .simulation import SimConfig, compare_to_theory, load_config, simulate
from .study import CovariateSpec, MatchedSet, Survival, Unit

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


# ---------------------------------------------------------------- CSV ingestion

def _split_list(text):
    return [t.strip() for t in text.split(",") if t.strip()] if text else []


def _covariate_spec(covariates, level_labels) -> CovariateSpec:
    names = tuple(_split_list(covariates))
    if not level_labels:
        return CovariateSpec(names)
    pairs = [tuple(_split_list(p)) for p in level_labels.split(";")]
    return CovariateSpec(names, tuple(pairs))


def _binary(value, column, line):
    v = value.strip()
    if v in ("0", "1"):
        return int(v)
    try:
        f = float(v)
    except ValueError:
        f = None
    if f in (0.0, 1.0):
        return int(f)
    raise ValidationError(f"line {line}: column {column!r} must be 0 or 1, got {value!r}")


def _real(value, column, line):
    try:
        x = float(value)
    except ValueError:
        raise ValidationError(f"line {line}: column {column!r} is not a number: {value!r}") from None
    if not math.isfinite(x):
        raise ValidationError(f"line {line}: column {column!r} must be finite, got {value!r}")
    return x


def read_matched_sets(path, covariates=()) -> list:
    """Parse a long-format CSV into matched sets.

    Units within a set and the sets themselves are ordered by id, so the
    row order of the file never matters.
    """
    covariates = list(covariates)
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot open {path}: {exc.strerror}") from None
    with handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames
        if not header:
            raise ValidationError(f"{path}: empty file or missing header row")
        header = [h.strip() for h in header]
        reader.fieldnames = header
        required = ["set_id", "unit_id", "treated"] + covariates
        if "response" in header:
            survival = False
        elif "time" in header or "event" in header:
            survival = True
            required += ["time", "event"]
        else:
            raise ValidationError(f"{path}: missing outcome column 'response' (or 'time' and 'event')")
        missing = [c for c in required if c not in header]
        if missing:
            raise ValidationError(f"{path}: missing column(s): {', '.join(missing)}")
        sets: dict = {}
        for line, row in enumerate(reader, start=2):
            if None in row or any(row[c] is None for c in required):
                raise ValidationError(f"line {line}: wrong number of fields")
            sid, uid = row["set_id"].strip(), row["unit_id"].strip()
            if not sid or not uid:
                raise ValidationError(f"line {line}: empty set_id or unit_id")
            if survival:
                outcome = Survival(_real(row["time"], "time", line),
                                   bool(_binary(row["event"], "event", line)))
            else:
                outcome = _real(row["response"], "response", line)
            cov = tuple(_binary(row[c], c, line) for c in covariates)
            unit = Unit(uid, bool(_binary(row["treated"], "treated", line)), outcome, cov)
            sets.setdefault(sid, []).append(unit)
    if not sets:
        raise ValidationError(f"{path}: no data rows")
    return [MatchedSet(sid, tuple(sorted(units, key=lambda u: u.unit_id)))
            for sid, units in sorted(sets.items())]


def load_study(args) -> ScoredStudy:
    spec = _covariate_spec(args.covariates, args.level_labels)
    sets = read_matched_sets(args.csv, spec.names)
    study = ScoredStudy.from_sets(sets, spec, args.method)
    return study.negated() if args.direction == "less" else study


# ---------------------------------------------------------------- output

class _Output:
    def __init__(self, args):
        self.args = args

    def note(self, msg):
        if not self.args.quiet:
            print(msg, file=sys.stderr)

    def emit(self, table: str, record: dict):
        args = self.args
        if args.output:
            Path(args.output).write_text(table, encoding="utf-8")
        else:
            sys.stdout.write(table)
        json_path = args.json or (str(Path(args.output).with_suffix(".json")) if args.output else None)
        if json_path:
            Path(json_path).write_text(reporting.dumps(record), encoding="utf-8")


def _directions(args):
    return ["greater", "less"] if args.direction == "two-sided" else [args.direction]


def _alpha_each(args):
    return args.alpha / 2 if args.direction == "two-sided" else args.alpha


def _studies(args):
    """(direction, study) pairs; 'less' is handled by negating scores."""
    base = load_study(argparse.Namespace(**{**vars(args), "direction": "greater"}))
    return [(d, base.negated() if d == "less" else base) for d in _directions(args)]


def _header(args, command):
    return {"command": command, "alpha": args.alpha, "direction": args.direction,
            "seed": args.seed, "method": args.method, "covariates": _split_list(args.covariates)}


# ---------------------------------------------------------------- subcommands

def cmd_analyze(args) -> int:
    out = _Output(args)
    results, dirs = [], []
    for d, study in _studies(args):
        results.append(submax_test(study, args.gamma, _alpha_each(args), args.seed, args.target_error))
        dirs.append(d)
    record = _header(args, "analyze")
    record["gamma"] = args.gamma
    record["results"] = [reporting.result_record(r, d) for r, d in zip(results, dirs)]
    record["reject"] = any(r.reject for r in results)
    out.emit(reporting.deviate_table(results, dirs), record)
    for r, d in zip(results, dirs):
        k = r.argmax
        out.note(f"[{d}] gamma={r.gamma:g}: max deviate {r.d_max:.4g} ({r.labels[k]}), "
                 f"kappa {r.kappa:.4g}, p {r.p_value:.3g} -> "
                 f"{'reject' if r.reject else 'no rejection'}")
    return EXIT_OK


def _grid(args):
    if args.grid:
        return np.array([float(x) for x in _split_list(args.grid)])
    if args.gamma_max is None and args.gamma_step is None and args.gamma_min is None:
        return default_gamma_grid()
    lo = 1.0 if args.gamma_min is None else args.gamma_min
    hi = 3.0 if args.gamma_max is None else args.gamma_max
    step = 0.05 if args.gamma_step is None else args.gamma_step
    if step <= 0:
        raise ValidationError("--gamma-step must be positive")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 10)


def cmd_sweep(args) -> int:
    out = _Output(args)
    grid = _grid(args)
    rows, dirs, summary = [], [], []
    for d, study in _studies(args):
        sw = sensitivity_sweep(study, grid, _alpha_each(args), args.seed, args.target_error,
                               bisect=args.bisect, resolution=args.resolution)
        rows += list(sw.rows)
        dirs += [d] * len(sw.rows)
        summary.append({"direction": d, "changepoint": sw.changepoint, "next_gamma": sw.next_gamma})
        if sw.changepoint is None:
            out.note(f"[{d}] no rejection at gamma={sw.rows[0].gamma:g}")
        elif sw.next_gamma is None:
            out.note(f"[{d}] rejects at every gamma up to {sw.changepoint:g}")
        else:
            out.note(f"[{d}] rejects at gamma={sw.changepoint:g}, not at {sw.next_gamma:g}")
    record = _header(args, "sweep")
    record["rows"] = [reporting.result_record(r, d) for r, d in zip(rows, dirs)]
    record["changepoints"] = summary
    out.emit(reporting.deviate_table(rows, dirs), record)
    return EXIT_OK


def cmd_closed(args) -> int:
    out = _Output(args)
    tables, blocks = [], []
    for d, study in _studies(args):
        res, ct = closed_test_study(study, args.gamma, _alpha_each(args), args.seed, args.target_error)
        block = reporting.closed_record(ct)
        block["direction"] = d
        block["gamma"] = args.gamma
        block["deviates"] = res.D
        blocks.append(block)
        tables.append(f"# direction={d}\n" + reporting.closed_table(ct, res.D))
        hits = [lab for lab, r in zip(ct.labels, ct.singleton_rejections()) if r]
        out.note(f"[{d}] closed testing rejects: {', '.join(hits) if hits else 'none'}")
    record = _header(args, "closed")
    record["gamma"] = args.gamma
    record["results"] = blocks
    out.emit("\n".join(tables), record)
    return EXIT_OK


def cmd_power(args) -> int:
    out = _Output(args)
    alt = FavorableAlternative.balanced(args.L, args.zeta0, args.zeta1, args.Ibar)
    rows = []
    for g in args.gamma:
        pw = power_row(alt, g, args.alpha, args.seed, args.target_error)
        rows.append({"L": args.L, "zeta0": args.zeta0, "zeta1": args.zeta1,
                     "I_bar": args.Ibar, "gamma": g, **pw})
    record = {"command": "power", "alpha": args.alpha, "seed": args.seed, "rows": rows}
    out.emit(reporting.power_table(rows), record)
    return EXIT_OK


def cmd_design_sens(args) -> int:
    out = _Output(args)
    zeta = np.asarray(args.zeta, dtype=float)
    weights = np.ones_like(zeta) if args.weights is None else np.asarray(args.weights, dtype=float)
    if weights.shape != zeta.shape:
        raise ValidationError("--weights needs one value per --zeta")
    value = design_sensitivity(weights, zeta)
    record = {"command": "design-sens", "zeta": zeta, "weights": weights,
              "design_sensitivity": value}
    header, row = ["design_sensitivity"], [value]
    if args.Ibar:
        finite = design_sensitivity_numeric(weights, zeta, args.Ibar)
        record["I_bar"] = args.Ibar
        record["finite_sample_crossing"] = finite
        header.append("finite_sample_crossing")
        row.append(finite)
    out.emit(reporting.tsv(header, [row]), record)
    return EXIT_OK


def _sim_config(args) -> SimConfig:
    if args.config:
        cfg = load_config(args.config)
        return cfg
    missing = [f"--{n}" for n in ("L", "zeta0", "zeta1", "Ibar") if getattr(args, n) is None]
    if missing:
        raise ValidationError(f"simulate needs --config or {', '.join(missing)}")
    return SimConfig(args.L, args.zeta0, args.zeta1, args.Ibar, gammas=tuple(args.gamma),
                     alpha=args.alpha, replications=args.reps, seed=args.seed,
                     methods=tuple(_split_list(args.methods)) or SIM_METHODS,
                     recompute_kappa=args.recompute_kappa, target_error=args.target_error)


def cmd_simulate(args) -> int:
    out = _Output(args)
    cfg = _sim_config(args)
    rep = simulate(cfg)
    disc = compare_to_theory(rep) if args.compare else None
    record = {"command": "simulate", **reporting.simulation_record(rep)}
    if disc is not None:
        record["theory"] = [{"gamma": d.gamma, "method": d.method, "simulated": d.simulated,
                             "theoretical": d.theoretical, "se": d.se, "flagged": d.flagged}
                            for d in disc]
    out.emit(reporting.simulation_table(rep, disc), record)
    out.note(f"{cfg.replications} replications in {rep.runtime:.1f}s (seed {cfg.seed})")
    return EXIT_OK


def cmd_amplify(args) -> int:
    out = _Output(args)
    pairs = amplify(args.gamma, args.delta or None)
    record = {"command": "amplify", "gamma": args.gamma,
              "pairs": [{"Delta": d, "Lambda": lam} for d, lam in pairs]}
    out.emit(reporting.amplify_table(pairs, args.gamma), record)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="submax",
        description="Sensitivity analysis for matched studies with effect-modification subgroups.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--target-error", type=float, default=DEFAULT_TARGET_ERROR,
                        help="absolute error target of the normal integrals")
    common.add_argument("--output", help="write the table here instead of stdout")
    common.add_argument("--json", help="structured report path (default: OUTPUT with .json)")
    common.add_argument("--quiet", action="store_true", help="suppress notices and warnings")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("csv", help="long-format CSV, one row per unit")
    data.add_argument("--covariates", default="", help="comma-separated binary modifier columns")
    data.add_argument("--level-labels", default="",
                      help="labels per covariate, e.g. 'female,male;poor,nonpoor'")
    data.add_argument("--method", default=None,
                      help="wilcoxon or prentice-wilcoxon (default from outcome type)")
    data.add_argument("--direction", choices=("greater", "less", "two-sided"), default="greater")

    p = sub.add_parser("analyze", parents=[common, data], help="test at one gamma")
    p.add_argument("--gamma", type=float, default=1.0)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", parents=[common, data], help="test along a gamma grid")
    p.add_argument("--grid", help="comma-separated gammas (default 1.00..3.00 by 0.05)")
    p.add_argument("--gamma-min", type=float)
    p.add_argument("--gamma-max", type=float)
    p.add_argument("--gamma-step", type=float)
    p.add_argument("--bisect", action="store_true", help="refine the changepoint")
    p.add_argument("--resolution", type=float, default=0.01)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("closed", parents=[common, data], help="closed testing at one gamma")
    p.add_argument("--gamma", type=float, default=1.0)
    p.set_defaults(func=cmd_closed)

    scen = argparse.ArgumentParser(add_help=False)
    scen.add_argument("--L", type=int)
    scen.add_argument("--zeta0", type=float)
    scen.add_argument("--zeta1", type=float)
    scen.add_argument("--Ibar", type=_positive_int)

    p = sub.add_parser("power", parents=[common, scen], help="analytic power")
    p.add_argument("--gamma", type=float, nargs="+", required=True)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("design-sens", parents=[common], help="design sensitivity")
    p.add_argument("--zeta", type=float, nargs="+", required=True)
    p.add_argument("--weights", type=float, nargs="+")
    p.add_argument("--Ibar", type=_positive_int, help="also solve at this many pairs per group")
    p.set_defaults(func=cmd_design_sens)

    p = sub.add_parser("simulate", parents=[common, scen], help="Monte Carlo power")
    p.add_argument("--config", help="INI file with a [simulation] section")
    p.add_argument("--gamma", type=float, nargs="+", default=[1.0])
    p.add_argument("--reps", type=_positive_int, default=10_000)
    p.add_argument("--methods", default="", help="subset of submax,oracle,pooled")
    p.add_argument("--recompute-kappa", action="store_true")
    p.add_argument("--compare", action="store_true", help="add analytic power columns")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("amplify", parents=[common], help="(Delta, Lambda) curve for a gamma")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--delta", type=float, nargs="*")
    p.set_defaults(func=cmd_amplify)
    return parser


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "power":
        missing = [f"--{n}" for n in ("L", "zeta0", "zeta1", "Ibar") if getattr(args, n) is None]
        if missing:
            parser.error(f"power needs {', '.join(missing)}")
    try:
        with warnings.catch_warnings():
            if args.quiet:
                warnings.simplefilter("ignore")
            else:
                warnings.simplefilter("once")
                warnings.showwarning = _show_warning
            return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
