"""Command-line interface: ``windsde build | simulate | validate | fit``.

Exit codes: 0 success (or validation passed), 1 validation failed,
2 usage or input error. Errors are reported on stderr as one JSON object.
"""

import argparse
from dataclasses import fields
from datetime import datetime, timezone
import json
import math
import sys
import warnings

import numpy as np

from . import __version__
from .analysis import AnalysisError, Thresholds, fit_distribution, validate_ensemble, write_plot_data
from .builder import BuildError, build, model_card, model_from_card
from .distributions import FAMILIES, SpecError, from_dict, make
from .simulator import SimulationConfig, SimulationError, read_ensemble, simulate

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _catalog_params():
    """Every catalog parameter name; each becomes a ``--kebab-case`` flag."""
    names = set()
    for cls in FAMILIES.values():
        if cls.__name__ == "Tabulated":
            continue
        names.update(f.name for f in fields(cls) if f.init)
    return sorted(names)


def _write_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _manifest(command, config, model_hash, seed, started):
    return {
        "command": command,
        "config": config,
        "model_hash": model_hash,
        "seed": seed,
        "tool_version": __version__,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
    }


def _now():
    return datetime.now(timezone.utc).isoformat()


# ---------------------------------------------------------------------------
# commands


def cmd_build(args):
    if args.spec:
        spec = _read_json(args.spec)
        if not isinstance(spec, dict):
            raise UsageError("spec file must hold a JSON object")
        dist = from_dict(spec)
    elif args.family:
        params = {k: v for k, v in vars(args).items() if k in _catalog_params() and v is not None}
        dist = make(args.family, **params)
    else:
        raise UsageError("give --family with parameter flags, or --spec FILE")
    method = {"closed": "closed_form", "quadrature": "quadrature", "auto": "auto"}[args.method]
    model = build(dist, args.alpha, method=method, grid_size=args.grid_size)
    _write_json(model_card(model), args.out)
    return EXIT_OK


def cmd_simulate(args):
    started = _now()
    card = _read_json(args.model)
    model = model_from_card(card)
    config = SimulationConfig(
        dt=args.dt,
        horizon=args.horizon,
        n_paths=args.n_paths,
        seed=args.seed,
        boundary_policy=args.boundary,
        init_policy=args.init,
        x0=args.x0,
        burn_in=args.burn_in,
        record_every=args.record_every,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore" if args.quiet else "default")
        ensemble = simulate(model, config, threads=args.threads, strict_alpha=args.alpha_check)
    ensemble.save(args.out, args.format)
    manifest = _manifest("simulate", {**config.to_dict(), "format": args.format, "model": args.model},
                         ensemble.model_hash, args.seed, started)
    manifest["config_hash"] = ensemble.config_hash
    manifest["output"] = args.out
    _write_json(manifest, args.out + ".manifest.json")
    return EXIT_OK


def cmd_validate(args):
    card = _read_json(args.model)
    model = model_from_card(card)
    try:
        ensemble = read_ensemble(args.ensemble)
    except OSError as exc:
        raise UsageError(f"cannot read {args.ensemble}: {exc.strerror}") from None
    except ValueError as exc:
        raise UsageError(f"malformed ensemble {args.ensemble}: {exc}") from None
    if ensemble.times.size < 2:
        raise UsageError("ensemble needs at least two time points")
    thresholds = Thresholds(ks=args.ks_threshold, mean_rel=args.mean_tol, var_rel=args.var_tol, acf_gap=args.acf_tol)
    report = validate_ensemble(ensemble.values, ensemble.sample_interval, model, thresholds)
    out = report.to_dict()
    out["model_hash"] = model.hash
    _write_json(out, args.report)
    if args.plot_prefix:
        write_plot_data(report, ensemble.values, model, args.plot_prefix)
    return EXIT_OK if report.passed else EXIT_FAIL


def _read_speed_csv(path):
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if [h.strip() for h in header] != ["time", "speed"]:
                raise UsageError("fit input must have the header 'time,speed'")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise UsageError(f"malformed CSV {path}: {exc}") from None
    if data.shape[1] != 2 or data.shape[0] < 2:
        raise UsageError("fit input needs two columns and at least two rows")
    if not np.all(np.isfinite(data)):
        raise UsageError("fit input contains non-finite values")
    steps = np.diff(data[:, 0])
    dt = float(np.mean(steps))
    if not dt > 0 or np.max(np.abs(steps - dt)) > 1e-6 * dt:
        raise UsageError("time column must be uniformly spaced (relative jitter <= 1e-6)")
    return data[:, 1], dt


def cmd_fit(args):
    speed, dt = _read_speed_csv(args.input)
    result = fit_distribution(speed, args.family, dt=dt)
    out = result.to_dict()
    out["sample_interval"] = dt
    _write_json(out, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _positive_float(text):
    value = float(text)
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"must be a finite number > 0, got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="windsde", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a model card from a distribution and decay rate")
    p.add_argument("--family", choices=sorted(k for k in FAMILIES if k != "tabulated"))
    p.add_argument("--spec", help="JSON distribution spec (catalog or tabulated)")
    for name in _catalog_params():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=float)
    p.add_argument("--alpha", type=_positive_float, required=True)
    p.add_argument("--method", choices=("auto", "closed", "quadrature"), default="auto")
    p.add_argument("--grid-size", type=int, default=256)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("simulate", help="simulate paths of a model card")
    p.add_argument("--model", required=True)
    p.add_argument("--dt", type=_positive_float, required=True)
    p.add_argument("--horizon", type=_positive_float, required=True)
    p.add_argument("--n-paths", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=("csv", "bin"), default="csv")
    p.add_argument("--boundary", choices=("reflect", "absorb_at_epsilon", "reject_step"), default="reflect")
    p.add_argument("--init", choices=("stationary_inverse_cdf", "fixed", "burn_in"), default="stationary_inverse_cdf")
    p.add_argument("--x0", type=float)
    p.add_argument("--burn-in", type=float, default=0.0)
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--alpha-check", action=argparse.BooleanOptionalAction, default=True,
                   help="fail when dt*alpha > 0.5 (on by default)")
    p.add_argument("--quiet", action="store_true", help="suppress step-size warnings")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="check an ensemble against its model")
    p.add_argument("--ensemble", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--report", default="-")
    p.add_argument("--plot-prefix")
    defaults = Thresholds()
    p.add_argument("--ks-threshold", type=_positive_float, default=defaults.ks)
    p.add_argument("--mean-tol", type=_positive_float, default=defaults.mean_rel)
    p.add_argument("--var-tol", type=_positive_float, default=defaults.var_rel)
    p.add_argument("--acf-tol", type=_positive_float, default=defaults.acf_gap)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fit", help="fit a family and decay rate to a 'time,speed' CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--family", required=True, help="catalog family or 'auto'")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_fit)
    return parser


def _fail(kind, message):
    sys.stderr.write(json.dumps({"error": kind, "message": str(message)}) + "\n")
    return EXIT_USAGE


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        return _fail("usage", exc)
    except SpecError as exc:
        return _fail("invalid_spec", exc)
    except BuildError as exc:
        return _fail("build", exc)
    except SimulationError as exc:
        return _fail("simulation", exc)
    except AnalysisError as exc:
        return _fail("precondition", exc)
    except (KeyError, TypeError, ValueError) as exc:
        return _fail("input", exc)


if __name__ == "__main__":
    sys.exit(main())
