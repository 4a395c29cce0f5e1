"""Command-line entry point: ``dynvertex <subcommand> ...``.

Exit codes: 0 success (identities hold), 1 identity failure or tolerance
breach, 2 usage error. Tabular output is CSV with a one-line JSON manifest
written next to it as ``<out>.manifest.json``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .duality_functions import Configuration, DomainError, DualityKind, eval_duality
from .qcalc import (dual_q_krawtchouk, parse_scalar, q6j, q_binomial, q_exp_big, q_exp_small,
                    q_pochhammer, racah_wilson)
from .simulator import SimConfig, parameters_from_b, run, scaling_constants
from .tracy_widom import F2Evaluator, NotConverged
from .transfer_verify import (ConfigurationSpace, DimensionMismatch, build_duality_matrix,
                              check_intertwining, mc_duality_expectation_check)
from .vertex_weights import QParams, s_weight_table


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument helpers

def _scalars(values: Dict[str, Optional[str]], mode: Optional[str]):
    """Parse named scalars, keeping rationals and decimals apart."""
    parsed = {k: parse_scalar(v) for k, v in values.items() if v is not None}
    has_float = any(isinstance(v, float) for v in parsed.values())
    has_ratio = any(isinstance(v, Fraction) and v.denominator != 1 for v in parsed.values())
    if has_float and has_ratio:
        raise UsageError("rationals (p/q) and decimals cannot be mixed in one run")
    if mode is None:
        mode = "float" if has_float else "exact"
    if mode == "exact" and has_float:
        raise UsageError("--mode exact needs rational arguments")
    if mode == "float":
        parsed = {k: float(v) for k, v in parsed.items()}
    return parsed, mode


def _spin_list(text: str, n: Optional[int] = None) -> List[int]:
    """Comma-separated capacities 2J (e.g. 1,2 for spins 1/2 and 1)."""
    try:
        caps = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--spins takes integer capacities 2J, got {text!r}") from None
    if n is not None:
        if len(caps) == 1:
            caps = caps * n
        if len(caps) != n:
            raise UsageError(f"--spins lists {len(caps)} spins for --n {n}")
    if not caps or any(c <= 0 for c in caps):
        raise UsageError("capacities 2J must be positive")
    return caps


def _int_list(text: str) -> List[int]:
    return [int(s) for s in text.split(",") if s.strip()]


def _fmt(v) -> str:
    return str(v) if isinstance(v, Fraction) else repr(float(v))


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _manifest(args, mode: str, started: float, extra: Optional[dict] = None) -> dict:
    params = {k: _jsonable(v) for k, v in vars(args).items()
              if k not in ("func", "config") and not callable(v)}
    out = {"subcommand": args.command, "parameters": params, "seed": params.get("seed"),
           "mode": mode, "version": __version__, "duration_s": round(time.time() - started, 6)}
    if extra:
        out.update(extra)
    return out


def _write_csv(path: str, header: Sequence[str], rows, manifest: dict):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    with open(path + ".manifest.json", "w") as fh:
        fh.write(json.dumps(manifest, sort_keys=True) + "\n")


def _emit_table(args, header, rows, mode, started, extra=None):
    manifest = _manifest(args, mode, started, extra)
    if args.out:
        _write_csv(args.out, header, rows, manifest)
    else:
        w = csv.writer(sys.stdout)
        w.writerow(header)
        w.writerows(rows)
    if args.json:
        print(json.dumps(manifest, sort_keys=True))


def _threads(args) -> int:
    env = os.environ.get("VD_THREADS")
    if env:
        return max(1, int(env))
    return args.threads or os.cpu_count() or 1


# ---------------------------------------------------------------------------
# subcommands

def cmd_special_fn(args) -> int:
    started = time.time()
    names = ("q", "a", "c", "z", "alpha", "beta", "gamma")
    vals, mode = _scalars({k: getattr(args, k) for k in names}, args.mode)
    q = vals.get("q")
    if q is None:
        raise UsageError("--q is required")
    fn = args.fn
    if fn == "qpoch":
        value = q_pochhammer(vals["a"], q, args.n)
    elif fn == "qbinom":
        value = q_binomial(args.N, args.n, q)
    elif fn == "rw":
        value = racah_wilson(args.n, args.x, vals["alpha"], vals["beta"], vals["gamma"], args.N, q)
    elif fn == "krawtchouk":
        value = dual_q_krawtchouk(args.n, args.x, vals["c"], args.N, q)
    elif fn == "q6j":
        a, b, e, d, c, f = (Fraction(s) for s in args.j.split(","))
        value = q6j(a, b, e, d, c, f, float(q))
    elif fn == "qexp":
        z = vals["z"]
        small, big = q_exp_small(z, q, args.K), q_exp_big(-z, q, args.K)
        value = small * big
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(fn)
    manifest = _manifest(args, mode, started, {"value": _fmt(value)})
    print(json.dumps(manifest, sort_keys=True) if args.json else _fmt(value))
    return 0


def cmd_weights(args) -> int:
    started = time.time()
    vals, mode = _scalars({"q": args.q, "z": args.z, "alpha": args.alpha}, args.mode)
    params = QParams(vals["q"], vals["z"], vals.get("alpha", 0), mode)
    I, J = Fraction(args.I), Fraction(args.J)
    table = s_weight_table(I, J, params)
    rows = [(c.i1, c.j1, c.i2, c.j2, _fmt(w)) for c, w in sorted(table.items(), key=lambda kv: kv[0].key())]
    sums: Dict[tuple, object] = {}
    for c, w in table.items():
        sums[(c.i1, c.j1)] = sums.get((c.i1, c.j1), 0) + w
    worst = max(abs(s - 1) for s in sums.values())
    _emit_table(args, ("i1", "j1", "i2", "j2", "weight"), rows, mode, started,
                {"max_row_sum_error": _fmt(worst),
                 "weights": {f"{c.i1},{c.j1},{c.i2},{c.j2}": _fmt(w) for c, w in table.items()}})
    ok = worst == 0 if mode == "exact" else worst < 1e-10
    return 0 if ok else 1


def _duality_kind(args) -> DualityKind:
    return DualityKind(args.kind, c=args.c, c0=args.c0)


def cmd_duality(args) -> int:
    started = time.time()
    vals, mode = _scalars({"q": args.q, "z": args.z, "alpha": args.alpha}, args.mode)
    params = QParams(vals["q"], vals.get("z", 1 if mode == "exact" else 1.0) or 1,
                     vals.get("alpha", 0), mode)
    kind = _duality_kind(args)
    if args.action == "eval":
        mu_occ, xi_occ = _int_list(args.mu), _int_list(args.xi)
        caps = _spin_list(args.spins, len(mu_occ))
        value = eval_duality(Configuration(tuple(mu_occ), tuple(caps)),
                             Configuration(tuple(xi_occ), tuple(caps)), kind, params)
        manifest = _manifest(args, mode, started, {"value": _fmt(value)})
        print(json.dumps(manifest, sort_keys=True) if args.json else _fmt(value))
        return 0
    caps = _spin_list(args.spins, args.n)
    space = ConfigurationSpace(tuple(caps))
    D = build_duality_matrix(space, space, kind, params)
    rows = [(space.label(i), space.label(j), _fmt(D[i][j]))
            for i in range(len(space)) for j in range(len(space))]
    _emit_table(args, ("mu", "xi", "value"), rows, mode, started)
    return 0


def cmd_verify(args) -> int:
    started = time.time()
    vals, mode = _scalars({"q": args.q, "z": args.z, "alpha": args.alpha}, args.mode)
    params = QParams(vals["q"], vals["z"], vals.get("alpha", 0), mode)
    caps = _spin_list(args.spins, args.n)
    kind = _duality_kind(args)
    report = check_intertwining(caps, kind, params, tol=args.tol)
    extra = {"residual": _fmt(report.residual), "holds": report.holds}
    holds = report.holds
    if args.t:
        space = ConfigurationSpace(tuple(caps))
        try:
            left, right = mc_duality_expectation_check(space, space, kind, params, args.t)
        except DimensionMismatch as exc:
            raise UsageError(f"--t: {exc}") from None
        gap = max(abs(a - b) for ra, rb in zip(left, right) for a, b in zip(ra, rb))
        if mode == "float":
            gap /= max(1.0, max(abs(v) for row in left + right for v in row))
        gap_ok = gap == 0 if mode == "exact" else gap < args.tol
        extra.update({"t": args.t, "expectation_residual": _fmt(gap)})
        holds = holds and gap_ok
    manifest = _manifest(args, mode, started, extra)
    if args.json:
        print(json.dumps(manifest, sort_keys=True))
    else:
        print(f"residual {_fmt(report.residual)}: identity {'holds' if report.holds else 'FAILS'}")
        if args.t:
            print(f"expectations after t={args.t}: residual {extra['expectation_residual']}")
    return 0 if holds else 1


def _parse_probe(text: str):
    y, t = text.split(":")
    return int(y), int(t)


def cmd_simulate(args) -> int:
    started = time.time()
    if args.b1 is not None or args.b2 is not None:
        if args.b1 is None or args.b2 is None:
            raise UsageError("--b1 and --b2 go together")
        q, z, alpha0 = parameters_from_b(args.b1, args.b2, args.lambda_exp)
    else:
        if args.q is None or args.z is None:
            raise UsageError("give --q and --z (or --b1/--b2)")
        q, z, alpha0 = float(parse_scalar(args.q)), float(parse_scalar(args.z)), float(parse_scalar(args.alpha))
    L = args.L
    probes = [_parse_probe(p) for p in args.probe] or [(int(args.nu * L), L)]
    initial = None
    if args.boundary == "closed":
        if not args.initial:
            raise UsageError("--boundary closed needs --initial bits")
        initial = [int(ch) for ch in args.initial]
        M = len(initial)
    else:
        M = args.M or max(int(np.ceil(L / z)), max(y for y, _ in probes))
    cfg = SimConfig(M=M, T=max(max(t for _, t in probes), 0), q=q, z=z, alpha0=alpha0,
                    boundary=args.boundary, seed=args.seed, replicas=args.replicas,
                    probes=tuple(probes))
    stats = run(cfg, threads=_threads(args), initial=initial)
    rows = [(r, y, t, int(stats.heights[r, j]))
            for r in range(cfg.replicas) for j, (y, t) in enumerate(probes)]
    summary = {"q": q, "z": z, "alpha0": alpha0, "probes": []}
    for j, (y, t) in enumerate(probes):
        entry = {"y": y, "t": t, "mean": float(stats.mean[j]), "variance": float(stats.variance[j])}
        if args.boundary == "step" and t > 0:
            nu = y / t
            try:
                m, sigma = scaling_constants(nu, z)
                x = (stats.heights[:, j] - m * t) / (sigma * t ** (1 / 3)) if sigma > 0 else None
                if x is not None:
                    entry["rescaled_quantiles"] = {str(p): float(np.quantile(x, p))
                                                   for p in (0.05, 0.25, 0.5, 0.75, 0.95)}
            except DomainError:
                pass
        summary["probes"].append(entry)
    _emit_table(args, ("replica", "y", "t", "height"), rows, "float", started, {"summary": summary})
    if not args.json:
        print(json.dumps(summary, sort_keys=True), file=sys.stderr if not args.out else sys.stdout)
    return 0


def cmd_tw(args) -> int:
    started = time.time()
    ev = F2Evaluator(order=args.order, max_order=args.max_order)
    if args.table:
        lo, hi, step = (float(v) for v in args.table.split(":"))
        grid = np.arange(lo, hi + step / 2, step)
        rows = [(repr(float(s)), repr(ev.evaluate(float(s))[0])) for s in grid]
        _emit_table(args, ("s", "F2"), rows, "float", started)
        return 0
    if args.s is None:
        raise UsageError("give --s or --table")
    value, order, diff = ev.evaluate(args.s)
    manifest = _manifest(args, "float", started,
                         {"value": value, "order": order, "doubling_difference": diff})
    print(json.dumps(manifest, sort_keys=True) if args.json else repr(value))
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of flag values (flags take precedence)")
    common.add_argument("--json", action="store_true", help="print the run manifest as JSON")
    common.add_argument("--threads", type=int, default=0, help="worker threads (VD_THREADS overrides)")

    def params(p, z=True):
        p.add_argument("--q", required=False)
        if z:
            p.add_argument("--z")
        p.add_argument("--alpha", default="0")
        p.add_argument("--mode", choices=("exact", "float"))

    parser = argparse.ArgumentParser(prog="dynvertex", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("special-fn", parents=[common], help="q-special functions")
    p.add_argument("--fn", required=True, choices=("qpoch", "qbinom", "rw", "krawtchouk", "q6j", "qexp"))
    p.add_argument("--q")
    p.add_argument("--mode", choices=("exact", "float"))
    for name in ("a", "c", "z", "alpha", "beta", "gamma"):
        p.add_argument(f"--{name}")
    for name in ("n", "x", "N"):
        p.add_argument(f"--{name}", type=int, default=0)
    p.add_argument("--K", type=int, default=30)
    p.add_argument("--j", help="six spins a,b,e,d,c,f for q6j")
    p.set_defaults(func=cmd_special_fn)
    subs["special-fn"] = p

    p = sub.add_parser("weights", parents=[common], help="table of S weights")
    params(p)
    p.add_argument("--I", default="1/2", help="vertical spin")
    p.add_argument("--J", default="1/2", help="horizontal spin")
    p.add_argument("--out")
    p.set_defaults(func=cmd_weights)
    subs["weights"] = p

    p = sub.add_parser("duality", parents=[common], help="duality function values")
    p.add_argument("action", choices=("eval", "matrix"))
    params(p)
    p.add_argument("--kind", required=True, choices=("dc", "dort", "dnew", "dtr"))
    p.add_argument("--c", type=int, default=0)
    p.add_argument("--c0", type=int, default=0)
    p.add_argument("--spins", default="1", help="comma list of capacities 2J (one value repeats)")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--mu")
    p.add_argument("--xi")
    p.add_argument("--out")
    p.set_defaults(func=cmd_duality)
    subs["duality"] = p

    p = sub.add_parser("verify", parents=[common], help="exact intertwining check")
    params(p)
    p.add_argument("--kind", required=True, choices=("dc", "dort", "dnew", "dtr"))
    p.add_argument("--c", type=int, default=0)
    p.add_argument("--c0", type=int, default=0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--spins", default="1", help="comma list of capacities 2J (one value repeats)")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--t", type=int, default=0, help="also compare both expectations after t steps (0..5)")
    p.set_defaults(func=cmd_verify)
    subs["verify"] = p

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo height samples")
    p.add_argument("--L", type=int, default=100)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--M", type=int, default=0)
    p.add_argument("--q")
    p.add_argument("--z")
    p.add_argument("--alpha", default="0")
    p.add_argument("--b1", type=float)
    p.add_argument("--b2", type=float)
    p.add_argument("--lambda-exp", type=float, default=0.0, dest="lambda_exp")
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--boundary", choices=("closed", "step"), default="step")
    p.add_argument("--initial", help="closed boundary: initial row as a 0/1 string")
    p.add_argument("--probe", action="append", default=[], help="y:t pair (repeatable)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)
    subs["simulate"] = p

    p = sub.add_parser("tw", parents=[common], help="Tracy-Widom F2")
    p.add_argument("--s", type=float)
    p.add_argument("--table", help="lo:hi:step")
    p.add_argument("--order", type=int, default=32)
    p.add_argument("--max-order", type=int, default=512, dest="max_order")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tw)
    subs["tw"] = p
    return parser, subs


def _parse(argv: Sequence[str]):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            conf = json.load(fh)
        if not isinstance(conf, dict):
            raise UsageError("--config must hold a JSON object")
        subs[args.command].set_defaults(**{k.replace("-", "_"): v for k, v in conf.items()})
        args = parser.parse_args(argv)
    return args


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, OSError, json.JSONDecodeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (UsageError, DomainError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
