"""Plain-text reports: tab-separated tables and JSON structured reports.

Tables print numbers to 6 significant digits.  Structured reports keep full
double precision (``repr`` round-trips), so reading one back reproduces every
number bit for bit.  Nothing time- or host-dependent is written into either.
"""

from __future__ import annotations

import json
import math

import numpy as np


def fmt(x) -> str:
    """Six significant digits; booleans as true/false; None as NA."""
    if x is None:
        return "NA"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "NA"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    out = f"{x:.6g}"
    return "0" if out == "-0" else out


def tsv(header, rows) -> str:
    lines = ["\t".join(header)]
    lines += ["\t".join(fmt(v) if not isinstance(v, str) else v for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _plain(x):
    """numpy scalars/arrays to JSON-ready python objects."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def dumps(report: dict) -> str:
    return json.dumps(_plain(report), indent=2, sort_keys=True) + "\n"


def loads(text: str) -> dict:
    return json.loads(text)


# ---------------------------------------------------------------- submax rows

def result_record(res, direction: str = "greater") -> dict:
    """Stable key names for one maximum-deviate test."""
    return {
        "direction": direction,
        "gamma": res.gamma,
        "alpha": res.alpha,
        "labels": list(res.labels),
        "sample_sizes": res.sample_sizes,
        "S": res.S,
        "theta": res.theta,
        "sd": res.sd,
        "deviates": res.D,
        "exceeds_kappa": res.exceeds,
        "d_max": res.d_max,
        "kappa": res.kappa,
        "p_value": res.p_value,
        "p_error": res.p_error,
        "reject": res.reject,
    }


def deviate_table(results, directions=None) -> str:
    """One row per (direction, Gamma) with every deviate, shaped like a sweep table.

    A leading ``n`` row holds the subpopulation sample sizes.  Each deviate
    has a companion ``>=kappa`` flag column.
    """
    results = list(results)
    if not results:
        return ""
    directions = directions or ["greater"] * len(results)
    labels = list(results[0].labels)
    header = (["direction", "gamma"] + labels + ["max", "kappa", "p_value", "reject"]
              + [f"{lab}>=kappa" for lab in labels])
    rows = [["", "n"] + [int(n) for n in results[0].sample_sizes] + ["", "", "", ""]
            + [""] * len(labels)]
    for d, r in zip(directions, results):
        rows.append([d, r.gamma] + list(r.D) + [r.d_max, r.kappa, r.p_value, r.reject]
                    + [bool(x) for x in r.exceeds])
    return tsv(header, rows)


def comparison_table(res) -> str:
    """Long form for a single Gamma: one row per comparison."""
    header = ["comparison", "n", "S", "theta", "sd", "deviate", "exceeds_kappa"]
    rows = [[lab, int(n), s, t, sd, d, bool(x)]
            for lab, n, s, t, sd, d, x in zip(res.labels, res.sample_sizes, res.S,
                                              res.theta, res.sd, res.D, res.exceeds)]
    return tsv(header, rows)


# ---------------------------------------------------------------- closed testing

def closed_record(ct) -> dict:
    return {
        "labels": list(ct.labels),
        "alpha": ct.alpha,
        "subsets": [[ct.labels[k] for k in s] for s in ct.subsets],
        "d": ct.d,
        "kappa": ct.kappa,
        "local_reject": ct.local_reject,
        "closed_reject": ct.closed_reject,
        "singleton_closed_reject": dict(zip(ct.labels, ct.singleton_rejections().tolist())),
    }


def closed_table(ct, deviates=None) -> str:
    header = ["subset", "size", "d", "kappa", "local_reject", "closed_reject"]
    rows = [["+".join(ct.labels[k] for k in s), len(s), d, kap, bool(loc), bool(cl)]
            for s, d, kap, loc, cl in zip(ct.subsets, ct.d, ct.kappa,
                                          ct.local_reject, ct.closed_reject)]
    out = tsv(header, rows)
    single = ct.singleton_rejections()
    srows = []
    for k, lab in enumerate(ct.labels):
        d = ct.d[ct.lookup((k,))] if deviates is None else deviates[k]
        srows.append([lab, d, bool(single[k])])
    return out + "\n" + tsv(["comparison", "deviate", "closed_reject"], srows)


# ---------------------------------------------------------------- power / simulation

def power_table(rows) -> str:
    """``rows`` are dicts with L, zeta0, zeta1, I_bar, gamma, submax, oracle, pooled."""
    header = ["L", "zeta0", "zeta1", "I_bar", "gamma", "submax", "oracle", "pooled"]
    return tsv(header, [[r[h] for h in header] for r in rows])


def simulation_record(report) -> dict:
    cfg = report.config
    return {
        "config": {
            "L": cfg.L, "zeta0": cfg.zeta0, "zeta1": cfg.zeta1, "I_bar": cfg.I_bar,
            "gammas": list(cfg.gammas), "alpha": cfg.alpha,
            "replications": cfg.replications, "seed": cfg.seed,
            "methods": list(cfg.methods), "recompute_kappa": cfg.recompute_kappa,
        },
        "cells": [
            {"gamma": c.gamma, "method": c.method, "count": c.count,
             "replications": c.replications, "proportion": c.proportion, "se": c.se}
            for c in report.cells
        ],
    }


def simulation_table(report, discrepancies=None) -> str:
    """Long form with a method column, so external arms can be appended."""
    cfg = report.config
    header = ["L", "zeta0", "zeta1", "I_bar", "gamma", "method", "count",
              "replications", "proportion", "se"]
    theory = {}
    if discrepancies is not None:
        header += ["theory", "flagged"]
        theory = {(d.gamma, d.method): d for d in discrepancies}
    rows = []
    for c in report.cells:
        row = [cfg.L, cfg.zeta0, cfg.zeta1, cfg.I_bar, c.gamma, c.method, c.count,
               c.replications, c.proportion, c.se]
        if discrepancies is not None:
            d = theory[(c.gamma, c.method)]
            row += [d.theoretical, d.flagged]
        rows.append(row)
    return tsv(header, rows)


def amplify_table(pairs, gamma: float) -> str:
    return tsv(["gamma", "Delta", "Lambda"], [[gamma, d, lam] for d, lam in pairs])
