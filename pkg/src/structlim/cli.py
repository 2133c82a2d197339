"""Command-line interface: ``structlim <subcommand> ...``.

Exit status is 0 on success, 2 for usage errors (including malformed
formulas) and 3 for input errors such as missing or malformed files, empty
structures or an exhausted enumeration budget.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from .convergence import (DEFAULT_EPS, DEFAULT_WINDOW, ConvergenceError, convergence_verdict,
                          density_trace, fo_split_check)
from .density import BudgetExceeded, DensityError, density_exact, density_sampled, satisfies
from .ef import EFError, elementary_distance
from .graphing import (DEFAULT_THETA, GraphingError, clean, debruijn_graphing, graphing_ball_stats,
                       hanf_check, load_graphing_spec)
from .io import load, load_manifest
from .local import LocalityError, ball_distribution, rho, tv_distance
from .parser import FormulaError, parse
from .structure import Structure, StructureError

PROG = "structlim"


class UsageError(Exception):
    pass


def _version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def _frac_text(v) -> str:
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _fraction_arg(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _formula(text: str, s: Structure):
    return parse(text, s.signature)


def _element(s: Structure, token: str) -> int:
    if s.labels is not None and token in s.labels:
        return s.labels.index(token)
    try:
        return s.check_element(int(token))
    except ValueError:
        raise StructureError(f"no element {token!r}") from None


# subcommands return (lines, record)

def cmd_eval(args):
    s = load(args.structure)
    f = _formula(args.formula, s)
    assignment = {}
    for item in args.assign:
        if "=" not in item:
            raise UsageError(f"expected var=element, got {item!r}")
        var, elem = item.split("=", 1)
        assignment[var] = _element(s, elem)
    result = satisfies(s, f, assignment)
    return [str(result).lower()], {"result": result}


def cmd_density(args):
    lines, records = [], []
    variables = args.vars.split(",") if args.vars else None
    for path in args.structures:
        s = load(path)
        f = _formula(args.formula, s)
        if args.samples is not None:
            v = density_sampled(s, f, args.samples, args.seed, variables)
            text = f"{v.text()} +- {v.radius:.6f} (95%, samples={v.samples}, seed={v.seed})"
        else:
            try:
                v = density_exact(s, f, variables, workers=args.threads)
            except BudgetExceeded as exc:
                raise BudgetExceeded(f"{exc}; rerun with --samples N") from None
            text = v.text()
        lines.append(f"{path} {text}" if len(args.structures) > 1 else text)
        records.append({"structure": str(path), **v.record()})
    return lines, {"densities": records}


def cmd_balls(args):
    d = ball_distribution(load(args.structure), args.radius)
    return d.lines(), {"radius": d.radius, "size": d.size,
                       "distribution": [{"code": c.hex, "frequency": _frac_text(f)} for c, f in d.items()]}


def cmd_rho(args):
    a, b = load(args.structure_a), load(args.structure_b)
    value = rho((a, _element(a, args.root_a)), (b, _element(b, args.root_b)), args.max_radius)
    return [_frac_text(value)], {"rho": _frac_text(value)}


def cmd_tv(args):
    a, b = load(args.structure_a), load(args.structure_b)
    value = tv_distance(ball_distribution(a, args.radius), ball_distribution(b, args.radius))
    return [_frac_text(value)], {"tv": _frac_text(value)}


def cmd_ef(args):
    d = elementary_distance(load(args.structure_a), load(args.structure_b), args.kmax)
    return [str(d)], {"distance": str(d), "exact": d.exact, "rank": d.rank,
                      "upper": _frac_text(d.upper)}


def cmd_converge(args):
    manifest = load_manifest(args.manifest)
    seq = manifest.load()
    lines, record = [], {"formulas": []}
    for text in args.formula:
        f = _formula(text, seq[0])
        trace = density_trace(seq, f, args.mode, samples=args.samples, seed=args.seed,
                              labels=manifest.labels, workers=args.threads)
        verdict = convergence_verdict(trace, args.epsilon, args.window)
        lines.append(f"formula {f}")
        lines.extend(f"  {i} {line}" for i, line in enumerate(trace.lines()))
        lines.append(f"  verdict: {verdict}")
        record["formulas"].append({"formula": str(f),
                                   "trace": [{"label": l, **v.record()} for l, v in trace.entries],
                                   "verdict": verdict.record()})
    report = fo_split_check(seq, args.rmax, args.kmax, args.epsilon, args.window)
    lines.extend(report.lines())
    record["split"] = report.record()
    return lines, record


def _parse_inject(items):
    out = []
    for item in items:
        parts = item.split(",")
        if len(parts) not in (2, 3):
            raise UsageError(f"expected x,y[,count], got {item!r}")
        try:
            x, y = Fraction(parts[0]), Fraction(parts[1])
            count = int(parts[2]) if len(parts) == 3 else 1
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"bad injected point {item!r}") from None
        out.extend([(x, y)] * count)
    return out


def cmd_graphing(args):
    g = debruijn_graphing() if args.builtin else load_graphing_spec(args.spec)
    stats = graphing_ball_stats(g, args.radius, args.samples, args.seed,
                                inject=_parse_inject(args.inject), workers=args.threads)
    lines = [f"codes {len(stats.hits)} samples {stats.samples} injected {stats.injected}"]
    lines.extend(stats.lines())
    record = {"stats": [{"code": c.hex, "hits": h} for c, h in sorted(stats.hits.items())]}
    if args.clean is not None:
        stats = clean(stats, args.clean)
        lines.append(f"cleaned theta={_frac_text(args.clean)} removed {len(stats.removed)} codes "
                     f"({sum(stats.removed.values())} hits)")
        lines.extend(f"  removed {c.hex} {h}" for c, h in sorted(stats.removed.items()))
        record["removed"] = [{"code": c.hex, "hits": h} for c, h in sorted(stats.removed.items())]
    if args.compare:
        other = load(args.compare)
        dist = ball_distribution(other, args.radius)
        tv = tv_distance(stats.to_distribution(), dist)
        hanf = hanf_check(stats, dist, args.t, other.n)
        lines.append(f"tv {float(tv):.6f}")
        lines.append(f"hanf t={args.t} n={other.n}: {'pass' if hanf.passed else 'fail'}")
        lines.extend(f"  {line}" for line in hanf.lines())
        record["compare"] = {"tv": _frac_text(tv), "hanf_passed": hanf.passed,
                             "hanf": [{"code": c.hex, "a": a, "b": b} for c, a, b in hanf.rows]}
    return lines, record


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog=PROG, description="First-order densities and limits of finite structures.")
    p.add_argument("--version", action="version", version=f"{PROG} {_version()}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--json", action="store_true", help="emit one JSON record")
        sp.set_defaults(func=func)
        return sp

    sp = add("eval", cmd_eval, "decide S |= f[assignment]")
    sp.add_argument("structure", type=Path)
    sp.add_argument("formula")
    sp.add_argument("--assign", action="append", default=[], metavar="VAR=ELEM")

    sp = add("density", cmd_density, "density of a formula, exact or sampled")
    sp.add_argument("structures", type=Path, nargs="+")
    sp.add_argument("--formula", "-f", required=True)
    mode = sp.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="enumerate all tuples (default)")
    mode.add_argument("--samples", type=int, help="Monte Carlo with N tuples")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--vars", help="comma-separated tuple of free variables")
    sp.add_argument("--threads", type=int, default=1)

    sp = add("balls", cmd_balls, "radius-r ball-type distribution")
    sp.add_argument("structure", type=Path)
    sp.add_argument("--radius", type=int, required=True)

    sp = add("rho", cmd_rho, "distance between rooted structures")
    sp.add_argument("structure_a", type=Path)
    sp.add_argument("root_a")
    sp.add_argument("structure_b", type=Path)
    sp.add_argument("root_b")
    sp.add_argument("--max-radius", type=int, default=None)

    sp = add("tv", cmd_tv, "total variation between ball distributions")
    sp.add_argument("structure_a", type=Path)
    sp.add_argument("structure_b", type=Path)
    sp.add_argument("--radius", type=int, required=True)

    sp = add("ef", cmd_ef, "quantifier-rank distance via EF games")
    sp.add_argument("structure_a", type=Path)
    sp.add_argument("structure_b", type=Path)
    sp.add_argument("--kmax", type=int, default=3)

    sp = add("converge", cmd_converge, "convergence diagnostics along a manifest")
    sp.add_argument("manifest", type=Path)
    sp.add_argument("--formula", "-f", action="append", default=[])
    sp.add_argument("--mode", choices=["auto", "exact", "sampled"], default="auto")
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--epsilon", type=_fraction_arg, default=DEFAULT_EPS)
    sp.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    sp.add_argument("--rmax", type=int, default=2)
    sp.add_argument("--kmax", type=int, default=3)
    sp.add_argument("--threads", type=int, default=1)

    sp = add("graphing", cmd_graphing, "sampled ball statistics of a graphing")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", choices=["debruijn"])
    src.add_argument("--spec", type=Path)
    sp.add_argument("--radius", type=int, default=2)
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--inject", action="append", default=[], metavar="X,Y[,COUNT]")
    sp.add_argument("--clean", type=_fraction_arg, nargs="?", const=DEFAULT_THETA, default=None,
                    metavar="THETA")
    sp.add_argument("--compare", type=Path)
    sp.add_argument("--t", type=int, default=3, help="Hanf threshold")
    sp.add_argument("--threads", type=int, default=1)
    return p


def _params(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("func", "json", "command"):
            continue
        if isinstance(v, Fraction):
            v = _frac_text(v)
        elif isinstance(v, Path):
            v = str(v)
        elif isinstance(v, list):
            v = [str(x) for x in v]
        out[k] = v
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be at least 1")
    try:
        lines, record = args.func(args)
    except (FormulaError, UsageError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, StructureError, DensityError, LocalityError, EFError, GraphingError,
            ConvergenceError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 3
    params = _params(args)
    if args.json:
        print(json.dumps({"version": _version(), "command": args.command, "params": params,
                          "result": record}, sort_keys=True))
    else:
        shown = " ".join(f"{k}={','.join(v) if isinstance(v, list) else v}" for k, v in params.items())
        print(f"# {PROG} {_version()} {args.command} {shown}")
        for line in lines:
            print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
