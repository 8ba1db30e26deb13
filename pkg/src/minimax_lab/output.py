"""CSV and JSON writers for risk tables, domination reports and LFP runs.

Floats are written with 17 significant digits so a CSV round-trips every
value exactly and identical runs give byte-identical files.
"""

import csv
import io
import json
import math

import numpy as np


def fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def theta_columns(model):
    if model.kind in ("location", "multivariate-location"):
        return ["mu"] if model.p == 1 else [f"mu{i + 1}" for i in range(model.p)]
    if model.kind == "scale":
        return ["sigma"] if model.p == 1 else [f"sigma{i + 1}" for i in range(model.p)]
    if model.kind == "location-scale":
        return ["mu", "sigma"]
    return [f"cov{i + 1}{j + 1}" for i in range(model.p) for j in range(model.p)]


def to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def to_json(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


def risk_table(model, estimates):
    header = theta_columns(model) + ["risk", "se", "replicates", "seed", "method"]
    rows = [list(e.theta.as_vector()) + [e.risk, e.se, e.replicates, e.seed, e.method] for e in estimates]
    return header, rows


def risk_json(model, estimates, extra=None):
    cols = theta_columns(model)
    out = {
        "rows": [dict(zip(cols, e.theta.as_vector().tolist())) | e.row() for e in estimates],
    }
    if extra:
        out.update(extra)
    return out


def domination_table(model, report):
    header = theta_columns(model) + ["challenger_risk", "incumbent_risk", "diff", "se", "replicates", "seed", "method"]
    rows = [
        list(r.theta.as_vector()) + [r.challenger, r.incumbent, r.diff, r.se, report.replicates, report.seed, "monte-carlo"]
        for r in report.rows
    ]
    return header, rows


def domination_json(model, report):
    cols = theta_columns(model)
    return {
        "challenger": report.challenger,
        "incumbent": report.incumbent,
        "replicates": report.replicates,
        "seed": report.seed,
        "verdict": report.verdict,
        "rows": [
            dict(zip(cols, r.theta.as_vector().tolist()))
            | {"challenger_risk": r.challenger, "incumbent_risk": r.incumbent, "diff": r.diff, "se": r.se}
            for r in report.rows
        ],
    }


def lfp_table(report):
    header = ["n", "atoms", "m", "r", "r_star", "reference", "gap"]
    rows = [[r.n, r.atoms, r.m, r.r, r.r_star, report.reference, report.reference - r.r] for r in report.rows]
    return header, rows


def conditions_table(report):
    dim = len(report.coverage[0][0]) if report.coverage else 0
    header = ["kind", "n"] + [f"x{i + 1}" for i in range(dim)] + ["passed", "failures"]
    rows = [["nesting", n] + [""] * dim + [ok, k] for n, ok, k in report.nesting]
    rows += [["coverage", n if n is not None else ""] + list(c) + [n is not None, ""] for c, n in report.coverage]
    return header, rows


def optimize_table(result):
    k = np.atleast_1d(result.constants).size
    header = [f"c{i + 1}" for i in range(k)] + ["risk", "se", "replicates", "method"]
    rows = [list(np.atleast_1d(result.constants)) + [result.risk, result.se, result.replicates, result.method]]
    return header, rows
