"""``minimax-lab``: reproducible risk, domination, geometry and LFP runs.

Exit status: 0 on success, 2 on invalid configuration, 3 on numerical failure.
"""

import argparse
import json
import os
import re
import sys

import numpy as np

from . import bayes, conditions, output, risk
from .config import COMMANDS, EXPERIMENT_PRESETS, build_all, merge_config, normalized, validate
from .errors import MinimaxLabError, NumericalError
from .models import theta_from_vector
from .optimize import SearchSpec, optimize_equivariant_constant
from .quadrature import QuadratureSpec

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run")
    g.add_argument("--config", help="JSON config file; flags override its keys")
    g.add_argument("--preset", help=f"experiment preset: {', '.join(EXPERIMENT_PRESETS)}")
    g.add_argument("--seed", type=int)
    g.add_argument("--reps", type=int, dest="replicates")
    g.add_argument("--method", choices=["monte-carlo", "quadrature"])
    g.add_argument("--rel-tol", type=float, dest="rel_tol")
    g.add_argument("--output", "-o")
    g.add_argument("--format", choices=["csv", "json"])
    g.add_argument("--workers", type=int)
    m = common.add_argument_group("model")
    m.add_argument("--model", dest="model_kind")
    m.add_argument("--base")
    m.add_argument("--m", type=int)
    m.add_argument("--p", type=int)
    m.add_argument("--shape", type=float)
    lo = common.add_argument_group("loss")
    lo.add_argument("--estimand")
    lo.add_argument("--loss", dest="loss_shape")
    lo.add_argument("--eta", type=float)
    lo.add_argument("--power", type=float)
    lo.add_argument("--a", type=_floats, help="coefficients for linear estimands / diagonal A")
    e = common.add_argument_group("estimators")
    e.add_argument("--estimator")
    e.add_argument("--challenger")
    e.add_argument("--incumbent")
    e.add_argument("--c", type=float, help="constant for one-parameter families")
    r = common.add_argument_group("restriction")
    r.add_argument("--restriction")
    r.add_argument("--lower", type=float, help="restriction bound a")
    r.add_argument("--upper", type=float, help="restriction bound b")
    r.add_argument("--on", choices=["location", "scale", "location-scale"])
    r.add_argument("--scale-unknown", action="store_true", default=None)
    r.add_argument("--peak", type=int)
    r.add_argument("--r", type=_floats, help="scale-product exponents")
    r.add_argument("--bound", type=float)
    gr = common.add_argument_group("grid")
    gr.add_argument("--theta", type=_floats, action="append", help="parameter point (repeatable)")
    gr.add_argument("--linspace", type=_floats, help="start,stop,num for a scalar grid")
    x = common.add_argument_group("command options")
    x.add_argument("--nmax", type=int, dest="n_max")
    x.add_argument("--probes", type=int)
    x.add_argument("--probe-box", type=float, dest="probe_box")
    x.add_argument("--nesting-samples", type=int, dest="nesting_samples")
    x.add_argument("--point", type=_floats)
    x.add_argument("--n-list", type=_ints, dest="n_list")
    x.add_argument("--spacing", type=float)
    x.add_argument("--family", choices=["scale-multiple", "quantile", "cov-diagonal"])
    x.add_argument("--bounds", type=_floats)
    x.add_argument("--tol", type=float)

    parser = argparse.ArgumentParser(prog="minimax-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS + ("run", "validate"):
        sub.add_parser(name, parents=[common])
    sub.add_parser("presets", help="list experiment presets")
    return parser


def _overrides(ns):
    """Nested config keys for the flags that were actually given."""
    out = {}

    def put(path, value):
        if value is None:
            return
        d = out
        for key in path[:-1]:
            d = d.setdefault(key, {})
        d[path[-1]] = value

    for key in ("preset", "seed", "replicates", "method", "rel_tol", "output", "format", "workers", "n_max",
                "probes", "probe_box", "nesting_samples", "point", "n_list", "spacing", "family", "bounds", "tol"):
        put((key,), getattr(ns, key, None))
    put(("model", "kind"), ns.model_kind)
    put(("model", "base"), ns.base)
    put(("model", "m"), ns.m)
    put(("model", "p"), ns.p)
    put(("model", "shape"), ns.shape)
    put(("loss", "estimand"), ns.estimand)
    put(("loss", "shape"), ns.loss_shape)
    put(("loss", "eta"), ns.eta)
    put(("loss", "power"), ns.power)
    if ns.a is not None:
        if ns.estimand == "linear" or ns.estimator in ("linear-mre", "cov-diagonal") or ns.estimator is None:
            put(("loss", "a"), ns.a)
        put(("estimator", "a"), ns.a)
    for key in ("estimator", "challenger", "incumbent"):
        put((key, "name"), getattr(ns, key))
    if ns.c is not None:
        put(("estimator", "c"), ns.c)
    put(("restriction", "kind"), ns.restriction)
    put(("restriction", "a"), ns.lower)
    put(("restriction", "b"), ns.upper)
    put(("restriction", "on"), ns.on)
    put(("restriction", "scale_unknown"), ns.scale_unknown)
    put(("restriction", "peak"), ns.peak)
    put(("restriction", "r"), ns.r)
    put(("restriction", "bound"), ns.bound)
    if ns.restriction is not None and ns.p is not None:
        put(("restriction", "p"), ns.p)
    if ns.restriction == "quantile-cone" and ns.eta is not None:
        put(("restriction", "eta"), ns.eta)
    if ns.theta:
        out["grid"] = {"points": ns.theta}
    elif ns.linspace:
        if len(ns.linspace) != 3:
            raise argparse.ArgumentTypeError("--linspace needs start,stop,num")
        start, stop, num = ns.linspace
        out["grid"] = {"linspace": {"start": start, "stop": stop, "num": int(num)}}
    return out


_SHAPE_ESTIMAND = {"scale-squared": "scale", "entropy": "scale", "stein": "covariance", "squared-identity": "covariance"}
_KIND_ESTIMAND = {"scale": "scale", "wishart": "covariance", "location": "location"}


def _infer_estimand(loss, model):
    """Estimand implied by the loss shape or, failing that, by the model kind."""
    if loss.get("shape") in _SHAPE_ESTIMAND:
        return _SHAPE_ESTIMAND[loss["shape"]]
    kind = model.get("kind") if isinstance(model, dict) else None
    if kind == "location-scale":
        return "quantile" if "eta" in loss else "location"
    return _KIND_ESTIMAND.get(kind, "location")


def _assemble(ns):
    data = {}
    if ns.config:
        try:
            with open(ns.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            return None, [f"config: cannot read {ns.config}: {exc}"]
        if not isinstance(data, dict):
            return None, ["$: config must be a JSON object"]
    over = _overrides(ns)
    preset = over.get("preset", data.get("preset"))
    if preset is not None:
        if preset not in EXPERIMENT_PRESETS:
            return None, [f"preset: unknown preset {preset!r}; valid presets: {', '.join(EXPERIMENT_PRESETS)}"]
        data = merge_config(EXPERIMENT_PRESETS[preset], data)
    if "model" in over and "model" not in data and "kind" not in over["model"]:
        # --p/--m without a model describe the restriction only
        over.pop("model")
    data = merge_config(data, over)
    data.pop("preset", None)
    loss = data.get("loss")
    if isinstance(loss, dict) and "estimand" not in loss:
        loss["estimand"] = _infer_estimand(loss, data.get("model"))
    if ns.subcommand in COMMANDS:
        if data.get("command", ns.subcommand) != ns.subcommand:
            return None, [f"command: config is a {data['command']!r} experiment, not {ns.subcommand!r}"]
        data["command"] = ns.subcommand
    return validate(data)


# ---------------------------------------------------------------------------
# execution


def _emit(cfg, text, summary, stdout):
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(text)
        print(summary, file=stdout)
    else:
        stdout.write(text)
        print(summary, file=sys.stderr)


def _fmt_format(cfg, default="csv"):
    return cfg.format if "format" in cfg.model_fields_set else default


def _grid(cfg, model):
    return [theta_from_vector(model, v) for v in cfg.grid.values()]


def run(cfg, stdout=None):
    """Execute a validated config; returns the exit status."""
    stdout = stdout or sys.stdout
    objs = build_all(cfg)
    model, loss, restriction = objs["model"], objs["loss"], objs["restriction"]
    quad = QuadratureSpec(rel_tol=cfg.rel_tol)
    fmt = _fmt_format(cfg)

    if cfg.command == "risk":
        points = _grid(cfg, model)
        if restriction is not None:
            points = _inside(points, restriction)
        est = objs["estimator"]
        value, arg, curve = risk.sup_risk(model, est, loss, points, cfg.method, cfg.replicates, cfg.seed,
                                          quad=quad, workers=cfg.workers)
        text = (output.to_csv(*output.risk_table(model, curve)) if fmt == "csv" else
                output.to_json(output.risk_json(model, curve, {"sup_risk": value, "argmax": arg.as_vector()})))
        summary = (f"risk {curve[0].risk:.6g} (se {curve[0].se:.2g})" if len(curve) == 1 else
                   f"sup risk {value:.6g} at {output.fmt(arg.as_vector().tolist()[0]) if arg.as_vector().size == 1 else arg.as_vector().tolist()}")
        _emit(cfg, text, summary, stdout)
    elif cfg.command == "dominate":
        points = _grid(cfg, model)
        if restriction is not None:
            points = _inside(points, restriction)
        rep = risk.domination_check(model, objs["challenger"], objs["incumbent"], loss, points,
                                    cfg.replicates, cfg.seed, cfg.workers)
        text = (output.to_csv(*output.domination_table(model, rep)) if fmt == "csv" else
                output.to_json(output.domination_json(model, rep)))
        _emit(cfg, text, f"verdict: {rep.verdict} ({rep.challenger} vs {rep.incumbent})", stdout)
    elif cfg.command == "conditions":
        probes = cfg.probes
        if cfg.probe_box is not None:
            from . import rng

            gen = rng.stream_generator(cfg.seed, 2)
            probes = gen.uniform(-cfg.probe_box, cfg.probe_box, size=(cfg.probes, restriction.dim))
        rep = conditions.verify_conditions(restriction, cfg.n_max, probes, cfg.nesting_samples, cfg.seed)
        fmt = _fmt_format(cfg, "json")
        text = output.to_json(rep.to_dict()) if fmt == "json" else output.to_csv(*output.conditions_table(rep))
        _emit(cfg, text, f"verdict: {rep.verdict}", stdout)
    elif cfg.command == "lfp":
        rep = bayes.lfp_run(model, restriction, cfg.n_list, cfg.spacing, loss, quad)
        text = output.to_csv(*output.lfp_table(rep)) if fmt == "csv" else output.to_json(rep.to_dict())
        last = rep.rows[-1]
        _emit(cfg, text, f"r_{last.n} = {last.r:.6g} (reference {rep.reference:.6g}, increasing: {rep.increasing})", stdout)
    elif cfg.command == "project":
        point = np.asarray(cfg.point, dtype=float)[None]
        if point.shape[1] != restriction.dim:
            raise _Invalid(f"point: needs {restriction.dim} coordinates, got {point.shape[1]}")
        if not restriction.convex:
            from .errors import UnsupportedProjectionError

            raise UnsupportedProjectionError(f"{type(restriction).__name__} is not convex")
        proj = restriction.project_coords(point)[0]
        text = ",".join(output.fmt(v) for v in proj) + "\n"
        if fmt == "json" and "format" in cfg.model_fields_set:
            text = output.to_json({"point": cfg.point, "projection": proj})
        if cfg.output:
            _emit(cfg, text, "projected", stdout)
        else:
            stdout.write(text)
    elif cfg.command == "optimize":
        bounds = tuple(cfg.bounds) if cfg.bounds else None
        search = SearchSpec(bounds=bounds, tol=cfg.tol, seed=cfg.seed or 0, method=cfg.method,
                            replicates=cfg.replicates or risk.default_replicates(model))
        res = optimize_equivariant_constant(model, cfg.family, loss, search)
        text = output.to_csv(*output.optimize_table(res)) if fmt == "csv" else output.to_json(res.to_dict())
        _emit(cfg, text, f"constants {np.round(np.atleast_1d(res.constants), 6).tolist()} risk {res.risk:.6g}", stdout)
    return EXIT_OK


class _Invalid(MinimaxLabError):
    pass


def _inside(points, restriction):
    outside = [t for t in points if not restriction.contains(t)]
    if outside:
        raise _Invalid(f"grid: point {outside[0].as_vector().tolist()} lies outside the restriction")
    return points


_NEGATIVE = re.compile(r"-(\d|\.\d|inf)")
_LIST_FLAGS = {"--point", "--theta", "--linspace", "--bounds", "--a", "--r", "--n-list"}


def _attach_list_values(argv):
    """Join list flags to their value so '--point -1,2' is not read as an option."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _LIST_FLAGS and i + 1 < len(argv) and _NEGATIVE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    parser = _parser()
    try:
        ns = parser.parse_args(_attach_list_values(sys.argv[1:] if argv is None else list(argv)))
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    if ns.subcommand == "presets":
        for name, body in EXPERIMENT_PRESETS.items():
            print(f"{name}\t{body['command']}", file=stdout)
        return EXIT_OK
    try:
        cfg, errors = _assemble(ns)
    except argparse.ArgumentTypeError as exc:
        cfg, errors = None, [str(exc)]
    if errors:
        for err in errors:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    if ns.subcommand == "validate":
        stdout.write(output.to_json(normalized(cfg)))
        return EXIT_OK
    try:
        return run(cfg, stdout)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        if stdout is sys.stdout:
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except MinimaxLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
