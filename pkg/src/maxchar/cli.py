"""Command-line front end.

Models are given either as JSON specs or in the mini-language
``kind:p1,p2,...``, where composite models name their generator after ``@``::

    gpd:0,1,0.5          uniform:2          const:2        perm:3
    frechet:2,2          (lambda, d)
    mgpd:2,1@const:1     (alpha, bound)     mgpd-maxima:2,1,100@const:1  (alpha, bound, n)
    frechet-maxstable:2@perm:2              thinned:0.5,3@const:1        (p, k)

Grids are points separated by ';' with comma-separated coordinates. Exit
codes: 0 success, 2 usage or configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Optional

import numpy as np

from . import __version__
from .dnorm import DEFAULT_MC_SIZE, DNorm, grid_csv
from .errors import MaxCharError, NumericFailure
from .experiments import (
    EXPERIMENTS, run_copula_limit_check, run_counterexample_cf_vs_maxcf, run_gpd_maxima_experiment,
    run_nonclosedness_demo, risk_identity_check, uniqueness_smoke_test,
)
from .inversion import invert_maxcf_details, zero_noise_cf
from .maxcf import closed_form_cf, maxcf_grid_csv, monte_carlo_cf, tail_integral_cf
from .models import model_from_spec
from .transport import w1_model_distance

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_MINI = {
    "const": ["d"], "perm": ["d"], "frechet": ["lambda", "d"], "gpd": ["mu", "sigma", "xi"],
    "uniform": ["upper"], "mgpd": ["alpha", "bound"], "mgpd-maxima": ["alpha", "bound", "n"],
    "frechet-maxstable": ["alpha"], "thinned": ["p", "k"],
}
_GEN_KEY = {"mgpd": "generator", "mgpd-maxima": "generator", "frechet-maxstable": "generator", "thinned": "base"}


class ConfigError(Exception):
    pass


def _number(text: str, field: str):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"{field}: {text!r} is not a number") from None
    return int(v) if v.is_integer() and "." not in text and "e" not in text.lower() else v


def parse_model(text: str) -> dict:
    """Mini-language or JSON model spec to a JSON spec dict."""
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--model: invalid JSON ({exc})") from None
    head, _, rest = text.partition("@")
    kind, _, args = head.partition(":")
    if kind not in _MINI:
        raise ConfigError(f"--model: unknown kind {kind!r}; valid kinds: {', '.join(sorted(_MINI))}")
    values = [a for a in args.split(",") if a.strip()] if args else []
    names = _MINI[kind]
    if len(values) != len(names):
        raise ConfigError(f"--model: {kind} takes {len(names)} parameter(s) ({','.join(names)}), got {len(values)}")
    params = {n: _number(v.strip(), f"--model {kind}.{n}") for n, v in zip(names, values)}
    if kind in _GEN_KEY:
        if not rest:
            raise ConfigError(f"--model: {kind} needs a generator after '@', e.g. {kind}:...@const:1")
        params[_GEN_KEY[kind]] = parse_model(rest)
    elif rest:
        raise ConfigError(f"--model: {kind} does not take a generator")
    return {"kind": kind, "params": params}


def build_model(text: str):
    try:
        return model_from_spec(parse_model(text))
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"--model: {exc}") from None


def parse_grid(text: str, dim: Optional[int] = None) -> np.ndarray:
    """``"1,2;3,4"`` to a 2 x 2 array; a path to a CSV file (header optional) also works."""
    if text.endswith(".csv"):
        try:
            with open(text) as fh:
                rows = [r for r in csv.reader(fh) if r]
        except OSError as exc:
            raise ConfigError(f"--grid: cannot read {text!r} ({exc})") from None
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        pts = [[_number(v, "--grid") for v in r] for r in rows]
    else:
        pts = [[_number(v.strip(), "--grid") for v in p.split(",")] for p in text.split(";") if p.strip()]
    if not pts or len({len(p) for p in pts}) != 1:
        raise ConfigError("--grid: points must be non-empty and share one dimension")
    arr = np.asarray(pts, float)
    if dim is not None and arr.shape[1] != dim:
        raise ConfigError(f"--grid: points have dimension {arr.shape[1]}, model has {dim}")
    return arr


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def parse_int_list(text: str, field: str) -> list:
    """``"1,5,10"`` or a range ``"1..20"``."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        a, b = _number(lo, field), _number(hi, field)
        if not (isinstance(a, int) and isinstance(b, int)) or b < a:
            raise ConfigError(f"{field}: bad range {text!r}")
        return list(range(a, b + 1))
    out = [_number(v.strip(), field) for v in text.split(",") if v.strip()]
    if not out or not all(isinstance(v, int) for v in out):
        raise ConfigError(f"{field}: expected integers, got {text!r}")
    return out


def parse_float_list(text: str, field: str) -> list:
    return [float(_number(v.strip(), field)) for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------------------


def _emit(text: str, output: Optional[str]):
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _require_seed(args, what):
    if args.seed is None:
        raise ConfigError(f"--seed is required for {what}")


def cmd_eval(args) -> int:
    model = build_model(args.model)
    grid = parse_grid(args.grid, model.dim)
    evaluator = args.evaluator or ("monte-carlo" if args.n is not None else "auto")
    if args.what == "maxcf":
        if np.any(grid < 0):
            raise ConfigError("--grid: max-CFs are defined for x >= 0 only")
        if evaluator == "monte-carlo":
            _require_seed(args, "Monte Carlo evaluation")
            cf = monte_carlo_cf(model, args.n or DEFAULT_MC_SIZE, args.seed, threads=args.threads)
        elif evaluator == "closed-form":
            cf = closed_form_cf(model)
        elif evaluator == "tail-integral":
            cf = tail_integral_cf(model)
        else:
            cf = zero_noise_cf(model) if (model.maxcf_closed_form or model.cdf) else None
            if cf is None:
                _require_seed(args, f"model {model.kind!r}, which has no zero-noise max-CF")
                cf = monte_carlo_cf(model, args.n or DEFAULT_MC_SIZE, args.seed, threads=args.threads)
        _emit(maxcf_grid_csv(cf, grid), args.output)
    else:
        if evaluator == "monte-carlo":
            _require_seed(args, "Monte Carlo evaluation")
            norm = DNorm.monte_carlo(model, args.n or DEFAULT_MC_SIZE, args.seed)
        elif evaluator in ("auto", "closed-form"):
            norm = DNorm.exact(model)
        else:
            raise ConfigError(f"--evaluator: {evaluator!r} is not available for D-norms")
        _emit(grid_csv(norm, grid), args.output)
    return EXIT_OK


def cmd_invert(args) -> int:
    model = build_model(args.model)
    grid = parse_grid(args.grid, model.dim)
    if np.any(grid <= 0):
        raise ConfigError("--grid: inversion needs x > 0 in every coordinate")
    if args.evaluator == "monte-carlo":
        _require_seed(args, "Monte Carlo evaluation")
        cf = monte_carlo_cf(model, args.n or DEFAULT_MC_SIZE, args.seed)
    elif args.evaluator == "tail-integral":
        cf = tail_integral_cf(model)
    else:
        cf = zero_noise_cf(model)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(model.dim)] + ["cdf", "achieved_error"])
    for x in grid:
        r = invert_maxcf_details(cf, x)
        w.writerow([format(v, ".15g") for v in x] + [format(r.value, ".15g"), format(r.achieved_error, ".15g")])
    _emit(out.getvalue(), args.output)
    return EXIT_OK


_STOCHASTIC = {"gpd-maxima", "copula-limit", "nonclosedness", "uniqueness"}


def cmd_experiment(args) -> int:
    name = args.name
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; valid names: {', '.join(EXPERIMENTS)}")
    if name in _STOCHASTIC:
        _require_seed(args, f"experiment {name}")
    seed = args.seed
    if name == "gpd-maxima":
        kw = {}
        if args.model:
            kw["generator"] = build_model(args.model)
        if args.grid:
            kw["grid"] = parse_grid(args.grid, kw["generator"].dim if "generator" in kw else None)
        if args.n_list:
            kw["n_list"] = parse_int_list(args.n_list, "--n-list")
        report = run_gpd_maxima_experiment(alpha=args.alpha if args.alpha is not None else 2.0, seed=seed,
                                           n_mc=args.n or 100_000, **kw)
    elif name == "counterexample":
        report = run_counterexample_cf_vs_maxcf(
            parse_int_list(args.n_list, "--n-list") if args.n_list else tuple(range(1, 21)),
            x=args.x if args.x is not None else 1.0)
    elif name == "copula-limit":
        norm = DNorm.exact(build_model(args.model or "perm:2"))
        grid = parse_grid(args.grid, 2) if args.grid else None
        report = run_copula_limit_check(norm, grid, n=args.n or 1_000_000, seed=seed)
    elif name == "risk-identity":
        model = build_model(args.model or "gpd:0,1,0.5")
        alphas = parse_float_list(args.alphas, "--alphas") if args.alphas else (0.25, 0.5, 0.75, 0.9)
        report = risk_identity_check(model, alphas)
    elif name == "nonclosedness":
        kw = {}
        if args.model:
            kw["base"] = build_model(args.model)
        if args.k_list:
            kw["k_list"] = parse_int_list(args.k_list, "--k-list")
        report = run_nonclosedness_demo(p=args.p if args.p is not None else 0.5, seed=seed,
                                        n_mc=args.n or 100_000, **kw)
    else:
        if not (args.model and args.model_b and args.grid):
            raise ConfigError("uniqueness needs --model, --model-b and --grid")
        a, b = build_model(args.model), build_model(args.model_b)
        report = uniqueness_smoke_test(a, b, parse_grid(args.grid, a.dim), n=args.n or 1_000_000, seed=seed,
                                       declared_equal=args.declared_equal)
    if args.output:
        report.write(args.output)
    else:
        sys.stdout.write(report.to_json() + "\n")
    print(f"verdict: {report.verdict}", file=sys.stderr if not args.output else sys.stdout)
    return EXIT_OK


def cmd_w1(args) -> int:
    _require_seed(args, "W1 between models")
    a, b = build_model(args.model), build_model(args.model_b)
    est = w1_model_distance(a, b, args.n or 10_000, args.seed)
    _emit(f"w1,std_error,n,seed\n{est.value:.15g},{est.std_error:.15g},{est.n},{est.seed}\n", args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------


_REQUIRED = {"eval": ("model", "grid"), "invert": ("model", "grid"), "experiment": (), "w1": ("model", "model_b")}
_CONFIG_KEYS = {"model", "model_b", "grid", "n", "seed", "threads", "output", "evaluator", "alpha", "x", "p",
                "n_list", "k_list", "alphas", "declared_equal"}


def _common(p):
    p.add_argument("--config", help="JSON file with flag values (keys use underscores)")
    p.add_argument("--seed", type=int, help="random seed; required by every stochastic command")
    p.add_argument("--n", type=int, help="Monte Carlo sample size")
    p.add_argument("--threads", type=int, default=1, help="sampling threads; results do not depend on it")
    p.add_argument("--output", help="output file (or directory for experiments); stdout otherwise")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maxchar", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate a max-CF or D-norm on a grid")
    p.add_argument("what", choices=("maxcf", "dnorm"))
    p.add_argument("--model")
    p.add_argument("--grid", help="points 'x1,x2;y1,y2' or a CSV file")
    p.add_argument("--evaluator", choices=("auto", "closed-form", "tail-integral", "monte-carlo"))
    _common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("invert", help="recover the cdf from a zero-noise max-CF")
    p.add_argument("--model")
    p.add_argument("--grid")
    p.add_argument("--evaluator", choices=("auto", "closed-form", "tail-integral", "monte-carlo"))
    _common(p)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("experiment", help="run a named experiment")
    p.add_argument("name", help=f"one of: {', '.join(EXPERIMENTS)}")
    p.add_argument("--model", help="generator / model (experiment dependent)")
    p.add_argument("--model-b", dest="model_b", help="second model for uniqueness")
    p.add_argument("--grid")
    p.add_argument("--alpha", type=float)
    p.add_argument("--x", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--n-list", dest="n_list", help="'10,100,1000' or '1..20'")
    p.add_argument("--k-list", dest="k_list", help="'1,2,3' or '1..20'")
    p.add_argument("--alphas", help="levels for risk-identity, e.g. '0.25,0.5'")
    p.add_argument("--declared-equal", dest="declared_equal", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("w1", help="Wasserstein-1 distance between two models by subsampling")
    p.add_argument("--model")
    p.add_argument("--model-b", dest="model_b")
    _common(p)
    p.set_defaults(func=cmd_w1)
    return parser


_INT_KEYS = {"seed", "n", "threads"}
_FLOAT_KEYS = {"alpha", "x", "p"}
_LIST_KEYS = {"n_list", "k_list", "alphas"}


def _config_value(key, value):
    """Config JSON values to the strings and numbers the flags would give."""
    if key in ("model", "model_b") and isinstance(value, dict):
        return json.dumps(value)
    if key == "grid" and isinstance(value, list):
        rows = [v if isinstance(v, list) else [v] for v in value]
        return ";".join(",".join(repr(float(c)) for c in r) for r in rows)
    if key in _LIST_KEYS and isinstance(value, list):
        return ",".join(str(v) for v in value)
    if key in _INT_KEYS and not (isinstance(value, int) and not isinstance(value, bool)):
        raise ConfigError(f"--config: {key} must be an integer (got {value!r})")
    if key in _FLOAT_KEYS and not (isinstance(value, (int, float)) and not isinstance(value, bool)):
        raise ConfigError(f"--config: {key} must be a number (got {value!r})")
    if key == "declared_equal" and not isinstance(value, bool):
        raise ConfigError(f"--config: declared_equal must be true or false (got {value!r})")
    return value


def _apply_config(parser, args, argv):
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"--config: cannot read {args.config!r} ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigError("--config: top level must be a JSON object")
    for key in cfg:
        if key not in _CONFIG_KEYS or not hasattr(args, key):
            raise ConfigError(f"--config: unknown key {key!r}")
    given = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
    for key, value in cfg.items():
        if key in given:
            continue  # flags win over the config file
        setattr(args, key, _config_value(key, value))
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        args = _apply_config(parser, args, argv)
        for flag in _REQUIRED[args.command]:
            if getattr(args, flag, None) in (None, ""):
                raise ConfigError(f"--{flag.replace('_', '-')} is required")
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (MaxCharError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
