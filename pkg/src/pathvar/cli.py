"""
Command-line driver: ``pathvar <subcommand> [options]``.

Every report is JSON with the validated configuration, the package version,
a SHA-256 of the canonical body and a timestamp kept outside the hashed body.
Exit status is 0 on success, 2 on invalid input and 1 on numerical failure
(for instance an unresolvable Lebesgue level).
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import sys

import numpy as np

from . import __version__
from .calculus import (CylindricalFunctional, change_of_variable_residual,
                       endpoint_functional, functional_change_of_variable_residual,
                       integral_functional, isometry_check, rough_smooth_decompose)
from .ensemble import resolve_threads
from .functions import FunctionError, function_from_spec, monomial
from .localtime import (conjecture_experiment, local_time_raw, local_time_upcrossing,
                        occupation_density, tanaka_residual)
from .partitions import PartitionSequence, ResolutionError
from .paths import PathError, SampledPath, generate_analytic, generate_fbm
from .roughpath import (canonical_lift, check_reduced_chen, controlled_from_function,
                        integral_equivalence_check, random_triples, rough_integral)
from .variation import pth_variation_scalar, pth_variation_tensor, signed_pth_sums


class ConfigError(ValueError):
    pass


def parse_levels(text: str) -> list:
    """``"lo:hi"`` (inclusive) or a single level."""
    try:
        if ":" in text:
            lo, hi = (int(a) for a in text.split(":"))
        else:
            lo = hi = int(text)
    except ValueError:
        raise ConfigError(f"bad level range {text!r}; expected lo:hi") from None
    if lo < 0 or hi < lo:
        raise ConfigError(f"bad level range {text!r}")
    return list(range(lo, hi + 1))


def parse_times(text: str | None):
    if text is None:
        return None
    try:
        return [float(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise ConfigError(f"bad time list {text!r}") from None


def _params(text: str) -> tuple:
    name, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise ConfigError(f"malformed parameter {item!r} in {text!r}")
        params[key.strip()] = val.strip()
    return name.strip(), params


def path_from_spec(text: str) -> SampledPath:
    """``fbm:hurst=0.5,steps=4096,seed=0,horizon=1,dim=1,index=0`` or an analytic kind."""
    name, params = _params(text)
    try:
        steps = int(params.pop("steps", 1024))
        horizon = float(params.pop("horizon", 1.0))
        if name == "fbm":
            kw = dict(hurst=float(params.pop("hurst", 0.5)), seed=int(params.pop("seed", 0)),
                      dim=int(params.pop("dim", 1)), path_index=int(params.pop("index", 0)))
            if params:
                raise ConfigError(f"unused path parameters {sorted(params)}")
            return generate_fbm(kw.pop("hurst"), horizon, steps, **kw)
        conv = {}
        for key, val in params.items():
            if ";" in val or key == "coeffs":
                conv[key] = [float(a) for a in val.split(";")]
            else:
                conv[key] = int(val) if key == "terms" else float(val)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad path spec {text!r}: {exc}") from None
    return generate_analytic(name, conv, horizon, steps)


def functional_from_spec(text: str) -> CylindricalFunctional:
    """``endpoint:m=2,c=1`` (c w(t)^m), ``time_endpoint:m=1`` (t w(t)^m), ``running:m=1`` (int w^m ds)."""
    name, params = _params(text)
    try:
        m = int(params.pop("m", 1))
        c = float(params.pop("c", 1.0))
    except ValueError:
        raise ConfigError(f"bad functional parameters in {text!r}") from None
    if params:
        raise ConfigError(f"unused functional parameters {sorted(params)}")
    if name == "endpoint":
        return endpoint_functional(monomial(m), (c,))
    if name == "time_endpoint":
        return endpoint_functional(monomial(m), (0.0, c))
    if name == "running":
        F = integral_functional(monomial(m))
        return F.scaled(c) if c != 1.0 else F
    raise ConfigError(f"unknown functional {name!r}")


def _add_path(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--path", help="path CSV (t,x1[,x2...])")
    g.add_argument("--gen", help="generator spec, e.g. fbm:hurst=0.5,steps=65536,seed=1")


def _add_common(p, levels=True, p_default=2, scheme=True, times=True):
    _add_path(p)
    p.add_argument("--p", type=int, default=p_default)
    if scheme:
        p.add_argument("--scheme", choices=["uniform", "lebesgue"], default="uniform")
    if levels:
        p.add_argument("--levels", default="6:10")
    if times:
        p.add_argument("--times", default=None, help="comma-separated evaluation times")
    p.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pathvar", description=__doc__.splitlines()[1])
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads (default: $PATHVAR_THREADS or CPU count)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fbm", help="generate a fractional Brownian path as CSV")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--steps", type=int, default=1024)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True)

    _add_common(sub.add_parser("variation", help="p-th variation per level"))
    _add_common(sub.add_parser("oddp", help="signed odd-p sums along Lebesgue partitions"),
                p_default=3, scheme=False)
    for name, hlp in [("integrate", "compensated integral and change-of-variable residual")]:
        p = sub.add_parser(name, help=hlp)
        _add_common(p)
        p.add_argument("--f", required=True, help="function spec, e.g. cos:a=1")
    for name, hlp in [("functional", "functional change-of-variable residual"),
                      ("isometry", "isometry gap for F(., S)"),
                      ("decompose", "rough/smooth decomposition of F(., S)")]:
        p = sub.add_parser(name, help=hlp)
        _add_common(p)
        p.add_argument("--functional", required=True, help="e.g. endpoint:m=2")

    p = sub.add_parser("localtime", help="local time grid as CSV (x,L)")
    _add_path(p)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--flavor", choices=["raw", "upcrossing", "occupation"], default="raw")
    p.add_argument("--scheme", choices=["uniform", "lebesgue"], default="lebesgue")
    p.add_argument("--out", required=True)

    p = sub.add_parser("tanaka", help="residual of the exact local-time identity")
    _add_path(p)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--f", required=True, help="ramp:a=0 (order p-1 by default) or poly:c=...")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--scheme", choices=["uniform", "lebesgue"], default="uniform")
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("conjecture", help="upcrossing vs occupation density experiment")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--paths", type=int, default=64)
    p.add_argument("--levels", default="6:10")
    p.add_argument("--steps", type=int, default=2 ** 16)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("roughpath-chen", help="reduced Chen defects of the canonical lift")
    _add_path(p)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--level", default="grid", help="variation level, 'grid' or 'zero'")
    p.add_argument("--triples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--out", default=None)

    p = sub.add_parser("roughpath-integrate", help="sewing integral of nabla f(S) against the lift")
    _add_path(p)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--f", required=True)
    p.add_argument("--level", default="grid")
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--min-depth", type=int, default=0)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("equivalence", help="sewing integral vs compensated sums")
    _add_path(p)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--f", required=True)
    p.add_argument("--levels", default="6:10")
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--out", default=None)
    return ap


def _load_path(args) -> SampledPath:
    if getattr(args, "path", None):
        return SampledPath.from_csv(args.path)
    return path_from_spec(args.gen)


def _lift_source(text: str):
    return text if text in ("grid", "zero") else int(text)


def _run(args) -> dict:
    cmd = args.command
    if cmd == "conjecture":
        rep = conjecture_experiment(args.hurst, parse_levels(args.levels), args.paths, args.seed,
                                    args.horizon, args.steps, threads=args.threads)
        return rep.to_json()
    S = _load_path(args)
    if cmd == "variation":
        lv, t = parse_levels(args.levels), parse_times(args.times)
        if S.dim > 1:
            return pth_variation_tensor(S, args.scheme, args.p, lv, t).to_json()
        return pth_variation_scalar(S, args.scheme, args.p, lv, t).to_json()
    if cmd == "oddp":
        return signed_pth_sums(S, "lebesgue", args.p, parse_levels(args.levels),
                               parse_times(args.times)).to_json()
    if cmd == "integrate":
        f = function_from_spec(args.f, args.p)
        return change_of_variable_residual(f, S, args.scheme, args.p, parse_times(args.times),
                                           parse_levels(args.levels)).to_json()
    if cmd in ("functional", "isometry", "decompose"):
        F = functional_from_spec(args.functional)
        fn = {"functional": functional_change_of_variable_residual, "isometry": isometry_check,
              "decompose": rough_smooth_decompose}[cmd]
        return fn(F, S, args.scheme, args.p, parse_times(args.times),
                  parse_levels(args.levels)).to_json()
    if cmd == "localtime":
        if args.flavor == "raw":
            part = PartitionSequence(args.scheme, S)(args.level)
            L = local_time_raw(S, part, args.p, args.t)
        elif args.flavor == "upcrossing":
            L = local_time_upcrossing(S, args.level, args.p, args.t)
        else:
            L = occupation_density(S, args.t, args.level)
        L.to_csv(args.out)
        return {"rows": int(len(L.x)), "flavor": L.flavor, "integral": L.integral()}
    if cmd == "tanaka":
        f = function_from_spec(args.f, args.p)
        part = PartitionSequence(args.scheme, S)(args.level)
        r = tanaka_residual(f, S, part, args.p, args.t)
        return {"residual": r, "level": args.level, "function": f.name}
    if cmd == "roughpath-chen":
        X = canonical_lift(S, args.p, _lift_source(args.level))
        tr = random_triples(S.horizon, args.triples, args.seed, S.times)
        return check_reduced_chen(X, tr, args.tol).to_json()
    if cmd == "roughpath-integrate":
        f = function_from_spec(args.f, args.p)
        X = canonical_lift(S, args.p, _lift_source(args.level))
        Y = controlled_from_function(f, S, args.p)
        return rough_integral(Y, X, args.t, args.max_depth, args.min_depth).to_json()
    if cmd == "equivalence":
        f = function_from_spec(args.f, args.p)
        return integral_equivalence_check(f, S, args.p, parse_levels(args.levels), args.t).to_json()
    raise ConfigError(f"unknown command {cmd!r}")


def _config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "threads")}
    return cfg


def report(args, result: dict) -> dict:
    body = {"command": args.command, "config": _config(args), "version": f"pathvar {__version__}",
            "result": result}
    text = json.dumps(body, sort_keys=True, default=_json_default)
    out = dict(body)
    out["body_sha256"] = hashlib.sha256(text.encode()).hexdigest()
    out["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return out


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.threads = resolve_threads(args.threads)
        if args.command == "fbm":
            S = generate_fbm(args.hurst, args.horizon, args.steps, args.seed, args.dim, args.index)
            S.to_csv(args.out)
            return 0
        result = _run(args)
    except ResolutionError as exc:
        print(f"pathvar: numerical failure: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, PathError, FunctionError, ValueError, OSError) as exc:
        print(f"pathvar: invalid input: {exc}", file=sys.stderr)
        return 2
    except (FloatingPointError, ArithmeticError, RuntimeError) as exc:
        print(f"pathvar: numerical failure: {exc}", file=sys.stderr)
        return 1
    rep = report(args, result)
    text = json.dumps(rep, sort_keys=True, indent=1, default=_json_default)
    if getattr(args, "out", None) and args.command != "localtime":
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        if args.command == "tanaka":
            print(f"residual {result['residual']:.3e}")
    else:
        print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
