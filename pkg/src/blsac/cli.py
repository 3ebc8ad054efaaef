"""Command line runner: ``blsac <experiment> [options]`` or ``blsac run CONFIG``.

Config files are ``key = value`` lines (``#`` starts a comment). Command
line options override config values. Exit codes: 0 success, 2 config
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import __version__
from .errors import NumericalError
from .experiments import EXPERIMENTS

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).split(",") if x.strip()]


def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _unit(x):
    return 0 <= x < 1


# name: (type, default, check, help)
COMMON = {
    "seed": (int, 0, _nonneg, "base random seed"),
    "workers": (int, 1, _positive, "worker processes for sweeps"),
}
INSTANCE = {
    "n_states": (int, 2, _positive, "number of states"),
    "n_actions": (int, 8, lambda m: m >= 2, "action grid size M"),
    "k": (int, 0, _nonneg, "basis columns per state (0 = complete basis)"),
    "k_low": (int, 3, _positive, "low-band columns per state"),
    "gamma": (float, 0.99, _unit, "discount"),
    "mixing": (float, 1e-3, lambda x: 0 <= x <= 1, "uniform restart probability for the density"),
}
PARAMS = {
    "solve-fixedpoint": {
        **INSTANCE,
        "alpha": (float, 1.0, _positive, "temperature"),
        "policy": (str, "soft-optimal", lambda s: s in ("uniform", "random", "soft-optimal"),
                   "uniform | random | soft-optimal"),
    },
    "decoupling-sweep": {
        **INSTANCE,
        "n_states": (int, 3, _positive, "number of states"),
        "n_actions": (int, 16, lambda m: m >= 2, "action grid size M"),
        "k_low": (int, 5, _positive, "low-band columns per state"),
        "alphas": (_float_list, "1e3,1,0.05", lambda xs: len(xs) > 0 and all(x > 0 for x in xs),
                   "comma-separated temperatures"),
    },
    "filter-response": {
        "sigma": (float, 0.5, _positive, "policy standard deviation"),
        "k": (int, 4, _positive, "filter half width K"),
        "n_actions": (int, 64, lambda m: m >= 2, "grid size for the response"),
    },
    "tabular-sac": {
        "env": (str, "bandit-cos", lambda s: s in ("bandit-cos", "bandit-spike", "random"),
                "bandit-cos | bandit-spike | random"),
        "variant": (str, "classic", lambda s: s in ("classic", "bandlimited", "sinc", "lowres"),
                    "classic | bandlimited | sinc | lowres"),
        "alpha": (float, 0.05, _positive, "temperature"),
        "n_states": (int, 2, _positive, "states (random env only)"),
        "n_actions": (int, 32, lambda m: m >= 2, "action grid size"),
        "k_low": (int, 5, _positive, "low-band columns"),
        "sigma": (float, 0.1, _positive, "policy std for the sinc filter"),
        "k": (int, 2, _positive, "sinc filter half width"),
        "gamma": (float, 0.9, _unit, "discount"),
        "outer_iterations": (int, 30, _positive, "policy iteration steps"),
        "evaluation_budget": (int, 0, _nonneg, "target sweeps per evaluation (0 = exact)"),
    },
    "gauss-conv": {
        "sigma": (float, 0.25, _positive, "policy standard deviation"),
        "n_actions": (int, 64, lambda m: m >= 2, "quadrature grid size"),
        "max_freq": (int, 8, _nonneg, "largest integer frequency f (w = pi f)"),
        "mc_samples": (int, 100_000, lambda n: n >= 100, "Monte Carlo samples per frequency"),
    },
    "noise-study": {
        "variant": (str, "both", lambda s: s in ("classic", "bandlimited", "both"),
                    "classic | bandlimited | both"),
        "seeds": (int, 30, _positive, "noise seeds"),
        "instances": (int, 10, _positive, "instances in the fixed family"),
        "n_states": (int, 2, _positive, "number of states"),
        "n_actions": (int, 16, lambda m: m >= 2, "action grid size"),
        "k_low": (int, 5, _positive, "low-band columns"),
        "temperature": (float, 20.0, _positive, "policy temperature (large = near uniform)"),
        "gamma": (float, 0.9, _unit, "discount"),
        "mixing": (float, 1e-3, lambda x: 0 <= x <= 1, "uniform restart probability"),
        "noise_scale": (float, 0.1, _positive, "std of high-band reward noise coefficients"),
    },
    "pendulum-cov": {
        "delta_ts": (_float_list, "0.005,0.01,0.02,0.04", lambda xs: all(x > 0 for x in xs), "time steps"),
        "delta_us": (_float_list, "0,0.5", lambda xs: len(xs) > 0, "action offsets"),
        "u": (float, 0.0, lambda x: -1 <= x <= 1, "base action"),
        "episodes": (int, 10_000, lambda n: n >= 10_000, "episodes"),
        "grid_points": (int, 9, lambda n: n >= 2, "noise grid points"),
        "field_theta": (float, 1.0, _positive, "OU mean reversion"),
        "field_sigma": (float, 1.0, _positive, "OU diffusion"),
        "field_dt": (float, 0.5, _positive, "OU step per episode"),
        "spatial_correlation": (float, 0.0, _unit, "innovation correlation between neighbours"),
    },
}
DEFAULT_FORMAT = {"solve-fixedpoint": "json", "noise-study": "json"}


def read_config(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve(experiment, config, overrides) -> dict:
    if experiment not in PARAMS:
        raise ConfigError(f"unknown experiment kind {experiment!r}")
    schema = {**COMMON, **PARAMS[experiment]}
    merged = {}
    for key, value in {**config, **{k: v for k, v in overrides.items() if v is not None}}.items():
        if key not in schema:
            raise ConfigError(f"unknown field {key!r} for experiment {experiment!r}")
        merged[key] = value
    resolved = {}
    for key, (typ, default, check, _) in schema.items():
        raw = merged.get(key, default)
        try:
            value = typ(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field {key!r}: cannot parse {raw!r}") from exc
        if not check(value):
            raise ConfigError(f"field {key!r}: value {raw!r} out of range")
        resolved[key] = value
    return resolved


def _fmt(x):
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return format(x, ".17g") if math.isfinite(x) else str(x)
    if isinstance(x, list):
        return ",".join(_fmt(v) for v in x)
    return str(x)


def render(experiment, params, result, fmt) -> str:
    header = {"tool": "blsac", "version": __version__, "experiment": experiment}
    if fmt == "json":
        doc = {**header, "config": params, "results": result}
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    rows = result if isinstance(result, list) else [result]
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}={v}\n")
    for k, v in params.items():
        buf.write(f"# {k}={_fmt(v)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    cols = list(rows[0]) if rows else []
    writer.writerow(cols)
    for row in rows:
        if not isinstance(row, dict) or any(isinstance(v, (dict, list)) for v in row.values()):
            raise ConfigError("this experiment produces nested output; use --format json")
        writer.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


def execute(experiment, config=None, overrides=None, out=None, fmt=None) -> int:
    try:
        params = resolve(experiment, config or {}, overrides or {})
        fmt = fmt or DEFAULT_FORMAT.get(experiment, "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError(f"field 'format': unknown format {fmt!r}")
        result = EXPERIMENTS[experiment](params)
        text = render(experiment, params, result, fmt)
    except ConfigError as exc:
        print(f"blsac: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"blsac: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _common_parser():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="base random seed")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None, help="output format")
    p.add_argument("--config", default=None, help="key = value config file")
    p.add_argument("--workers", type=int, default=None, help="worker processes for sweeps")
    return p


def build_parser():
    parser = argparse.ArgumentParser(prog="blsac", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"blsac {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    common = _common_parser()
    run = sub.add_parser("run", parents=[common], help="run the experiment named in a config file")
    run.add_argument("config_path")
    for name, schema in PARAMS.items():
        sp = sub.add_parser(name, parents=[common], help=f"{name} experiment")
        for key, (_, default, _, help_text) in schema.items():
            # every option is a string here; types are applied in resolve()
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                            help=f"{help_text} (default {default})")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    ns = vars(args)
    try:
        if args.experiment == "run":
            config = read_config(args.config_path)
            experiment = config.pop("experiment", None)
            if experiment is None:
                raise ConfigError("config has no 'experiment' field")
        else:
            experiment = args.experiment
            config = read_config(args.config) if args.config else {}
            named = config.pop("experiment", experiment)
            if named != experiment:
                raise ConfigError(f"config is for {named!r}, not {experiment!r}")
    except ConfigError as exc:
        print(f"blsac: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    skip = {"experiment", "config", "config_path", "out", "format"}
    overrides = {k: v for k, v in ns.items() if k not in skip}
    fmt = config.pop("format", None)
    out = config.pop("out", None)
    fmt, out = args.format or fmt, args.out or out
    return execute(experiment, config, overrides, out, fmt)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
