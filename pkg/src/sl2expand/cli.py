"""Command-line interface: ``sl2expand <subcommand> [flags]``.

Output is JSON lines (schema 1): a header record, one record per row or a
single result record, and a trailing meta record carrying the timestamp and
wall clock. Only the meta record varies between identical runs.

Exit codes: 0 success, 1 usage error, 2 budget exceeded or a failed check.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime
import io
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .cayley import (
    BudgetExceeded,
    QuotientGroup,
    closed_form_counts,
    count_oracles,
    girth,
    is_bipartite,
    random_symmetric_genset,
    spectral_rho,
)
from .polyring import (
    PolyFp,
    factor,
    is_admissible,
    is_admissible_poly,
    is_irreducible,
    random_irreducible,
    smallest_irreducible,
)
from .presets import PRESETS, preset_genset
from .quotient import ResidueRing
from .rng import RNG_ID
from .sieve import ExperimentConfig, run_big_sieve, run_expander_survey, run_small_sieve
from .sl2core import GenSet, parse_matrix
from .walker import PREDICATES, escape_probability, free_pair_search

EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 1, 2

PREDICATE_HELP = (
    "target set: zero-entry (some entry is 0), trace (tr = alpha), torsion (trace in F_p), "
    "square (g = h^2), reducible (char poly splits), ad-fixed (det(I - Ad g) = 0), all"
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


# argument groups

GLOBAL_DEFAULTS = {"seed": 0, "budget": None, "out": None, "format": "json", "config": None}


def _add_globals(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="RNG seed (default 0)")
    g.add_argument("--budget", type=int, default=argparse.SUPPRESS,
                   help="cap on group order for tables and enumeration")
    g.add_argument("--out", default=argparse.SUPPRESS, help="write the report to this file")
    g.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS,
                   help="json (JSON lines, default) or csv")
    g.add_argument("--config", default=argparse.SUPPRESS, help="INI file with an [experiment] section")


def _add_group_args(p: argparse.ArgumentParser, need_f: bool = True) -> None:
    p.add_argument("--p", type=int, default=3, help="characteristic")
    p.add_argument("--f", required=need_f, help='modulus as coefficient list "c0,c1,...[@p]"')
    p.add_argument("--gens", default=None,
                   help=f"preset ({', '.join(sorted(PRESETS))}) or matrix literals separated by '|'; "
                        "default: free3 when p = 3, else two random generators")


EXPERIMENT_FLAGS = [
    ("--p", "p", int, "characteristic"),
    ("--gens", "generators", str, "preset name or matrix literals separated by '|'"),
    ("--strategy", "strategy", str, "progression (N*i+1) | primes (> M) | explicit"),
    ("--M", "M", int, "admissibility parameter"),
    ("--degrees", "degrees", str, "explicit degree list, comma separated"),
    ("--count", "count", int, "number of degrees from the strategy"),
    ("--l", "l_schedule", str, "walk lengths: '10,20,30' or 'lo:hi:step'"),
    ("--trials", "trials", int, "Monte-Carlo walks per quotient"),
    ("--direct-trials", "direct_trials", int, "exact upstairs walks (0 = skip)"),
    ("--pred", "predicate", str, PREDICATE_HELP),
    ("--alpha", "alpha", int, "trace value for --pred trace"),
    ("--c", "c", float, "small sieve pairing constant: largest n with c*n <= l"),
    ("--kappa", "kappa", float, "big sieve: i(l) = ceil(kappa*sqrt(l/log l))"),
    ("--i2", "i2", int, "big sieve: smallest factor degree (0 = first prime > M)"),
    ("--gamma", "gamma", float, "big sieve density cap per factor"),
    ("--r", "r", int, "number of independent walks"),
    ("--plateau", "rho_plateau", float, "survey: spectral radius plateau"),
    ("--girth-max", "girth_max", int, "survey: longest cycle searched"),
]


def _add_experiment_args(p: argparse.ArgumentParser) -> None:
    for flag, dest, typ, hlp in EXPERIMENT_FLAGS:
        p.add_argument(flag, dest=f"cfg_{dest}", type=typ, default=None, help=hlp)


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="sl2expand", description="Expansion and random-walk escape in SL2(F_p[t]) quotients.")
    top.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_globals(top)
    sub = top.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, hlp):
        p = sub.add_parser(name, help=hlp, description=hlp)
        _add_globals(p)
        return p

    p = add("factor", "factor a polynomial over F_p")
    p.add_argument("--f", required=True, help='"c0,c1,...@p" or coefficients with --p')
    p.add_argument("--p", type=int, default=None)

    p = add("admissible", "M-admissibility of an integer degree or a polynomial")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--f", default=None)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--M", type=int, required=True)

    p = add("irreducible", "find an irreducible polynomial, or test one with --f")
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--f", default=None)
    p.add_argument("--smallest", action="store_true", help="first irreducible in counting order")

    p = add("girth", "girth of Cay(SL2(F_p[t]/(f)), S)")
    _add_group_args(p)
    p.add_argument("--max-length", type=int, default=64)

    p = add("spectrum", "two-sided spectral radius on mean-zero functions")
    _add_group_args(p)
    p.add_argument("--method", choices=("auto", "dense", "iterative"), default="auto")
    p.add_argument("--tol", type=float, default=1e-6)

    p = add("census", "exhaustive counts over SL2(q) with closed-form cross-checks")
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--f", required=True)

    p = add("walk", "escape probability upstairs and its quotient bound")
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--gens", default=None)
    p.add_argument("--f", default=None, help="quotient modulus for the bound column (optional)")
    p.add_argument("--pred", choices=PREDICATES, required=True, help=PREDICATE_HELP)
    p.add_argument("--alpha", type=int, default=2)
    p.add_argument("--l", required=True, help="walk lengths: '20' or '10,20' or 'lo:hi:step'")
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--direct-trials", type=int, default=None)

    for name, hlp in (("small-sieve", "small sieve decay table and log-linear fit"),
                      ("big-sieve", "big sieve over products of prime-degree moduli"),
                      ("survey", "girth, spectral radius and bipartiteness across moduli")):
        p = add(name, hlp)
        _add_experiment_args(p)

    p = add("free-pair", "search a ball of S for a pair with no short relation")
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--gens", default=None)
    p.add_argument("--N", type=int, default=2, help="ball radius")
    p.add_argument("--L", type=int, default=12, help="certification depth")
    p.add_argument("--max-pairs", type=int, default=None)
    return top


# helpers

def _poly(text: str, p: int | None) -> PolyFp:
    return PolyFp.parse(text, p)


def _genset(spec: str | None, p: int, G: QuotientGroup | None, seed: int) -> GenSet:
    if spec is None:
        if p == 3:
            return preset_genset("free3")
        if G is None:
            raise UsageError("--gens is required when p != 3")
        return random_symmetric_genset(G, 2, seed)
    if spec in PRESETS:
        S = preset_genset(spec)
    else:
        S = GenSet(parse_matrix(s.strip(), p) for s in spec.split("|") if s.strip())
    if S.p != p:
        raise UsageError(f"generators live over F_{S.p}, but --p is {p}")
    return S


def _group(args) -> QuotientGroup:
    f = _poly(args.f, args.p)
    G = QuotientGroup(ResidueRing(f))
    if args.budget is not None and G.order > args.budget:
        raise BudgetExceeded(G.name, G.order, args.budget)
    return G


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return None if math.isnan(x) or math.isinf(x) else x
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    return x


def _dumps(rec: dict) -> str:
    return json.dumps(_clean(rec), sort_keys=True, separators=(",", ":"))


def _csv(records: list[dict]) -> str:
    rows = [r for r in records if r.get("type") in ("row", "result")]
    flat = []
    for r in rows:
        flat.append({k: (json.dumps(_clean(v), sort_keys=True) if isinstance(v, (dict, list, tuple)) else _clean(v))
                     for k, v in r.items()})
    keys = []
    for r in flat:
        keys += [k for k in r if k not in keys]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    w.writerows(flat)
    return buf.getvalue()


def _single(command: str, params: dict, result: dict, seed: int) -> list[dict]:
    return [
        {"schema": 1, "type": "header", "experiment": command, "params": params, "rng_id": RNG_ID},
        {"schema": 1, "type": "result", "experiment": command, **result, "seed": seed, "rng_id": RNG_ID},
    ]


# subcommands (each returns (records, ok))

def cmd_factor(args):
    f = _poly(args.f, args.p)
    fac = factor(f, seed=args.seed)
    res = {"f": f.to_text(), "unit": fac.unit,
           "factors": [{"factor": g.to_text(), "multiplicity": m, "degree": int(g.degree)} for g, m in fac.factors],
           "squarefree": fac.is_squarefree(), "irreducible": len(fac.factors) == 1 and fac.factors[0][1] == 1}
    return _single("factor", {"f": args.f}, res, args.seed), True


def cmd_admissible(args):
    if (args.n is None) == (args.f is None):
        raise UsageError("give exactly one of --n or --f")
    if args.n is not None:
        val = is_admissible(args.n, args.M)
        params = {"n": args.n, "M": args.M}
    else:
        val = is_admissible_poly(_poly(args.f, args.p), args.M)
        params = {"f": args.f, "M": args.M}
    return _single("admissible", params, {"admissible": bool(val)}, args.seed), True


def cmd_irreducible(args):
    if args.f is not None:
        f = _poly(args.f, args.p)
        res = {"f": f.to_text(), "irreducible": bool(f.degree >= 1 and is_irreducible(f))}
        return _single("irreducible", {"f": args.f}, res, args.seed), True
    if args.n is None:
        raise UsageError("give --n (degree) or --f (polynomial to test)")
    f = smallest_irreducible(args.p, args.n) if args.smallest else random_irreducible(args.p, args.n, args.seed)
    res = {"f": f.to_text(), "degree": args.n, "method": "smallest" if args.smallest else "random"}
    return _single("irreducible", {"p": args.p, "n": args.n, "smallest": args.smallest}, res, args.seed), True


def cmd_girth(args):
    G = _group(args)
    S = _genset(args.gens, args.p, G, args.seed)
    rep = girth(G, S, max_length=args.max_length, **({"table_budget": args.budget} if args.budget else {}))
    res = {"group": G.name, "modulus": G.descriptor, "order": G.order, **rep.as_dict()}
    params = {"p": args.p, "f": args.f, "gens": [g.to_text() for g in S], "max_length": args.max_length}
    return _single("girth", params, res, args.seed), True


def cmd_spectrum(args):
    G = _group(args)
    S = _genset(args.gens, args.p, G, args.seed)
    rep = spectral_rho(G, S, method=args.method, tol=args.tol, seed=args.seed)
    res = {"group": G.name, "modulus": G.descriptor, "order": G.order, "bipartite": is_bipartite(G, S),
           **rep.as_dict()}
    params = {"p": args.p, "f": args.f, "gens": [g.to_text() for g in S], "method": args.method, "tol": args.tol}
    return _single("spectrum", params, res, args.seed), True


def cmd_census(args):
    G = _group(args)
    if not G.is_field_group:
        raise UsageError("census needs an irreducible modulus")
    kw = {"budget": args.budget} if args.budget else {}
    c = count_oracles(G, **kw)
    res = c.as_dict()
    res["closed_form"] = closed_form_counts(G.field)
    res["nonsquare_fraction"] = c.nonsquares / c.order
    res["reducible_fraction"] = c.reducible / c.order
    ok = c.closed_form_agrees and all(c.basics.values()) and c.order == c.q * (c.q * c.q - 1)
    return _single("census", {"p": args.p, "f": args.f}, res, args.seed), ok


def cmd_walk(args):
    S = _genset(args.gens, args.p, None, args.seed)
    ls = ExperimentConfig(l_schedule=args.l, p=args.p, generators="free3").l_schedule
    f = _poly(args.f, args.p) if args.f else None
    kw = {"exact_budget": args.budget} if args.budget else {}
    rows = escape_probability(S, args.pred, ls, f, args.trials, args.seed, args.alpha,
                              args.direct_trials, **kw)
    params = {"p": args.p, "gens": [g.to_text() for g in S], "f": args.f, "pred": args.pred, "alpha": args.alpha,
              "l": ls, "trials": args.trials, "direct_trials": args.direct_trials}
    recs = [{"schema": 1, "type": "header", "experiment": "walk", "params": params, "rng_id": RNG_ID}]
    for r in rows:
        d = r.as_dict()
        recs.append({"schema": 1, "type": "row", "experiment": "walk", "l": r.l, "estimate": r.direct,
                     "ci_lo": r.direct_lo, "ci_hi": r.direct_hi, **{k: v for k, v in d.items() if k != "l"},
                     "seed": args.seed, "rng_id": RNG_ID})
    return recs, all(r.consistent for r in rows)


def _experiment_config(args) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        if not cp.read(args.config):
            raise UsageError(f"cannot read config file {args.config}")
        for sec in cp.sections():
            values.update(cp[sec])
    for _, dest, _, _ in EXPERIMENT_FLAGS:
        v = getattr(args, f"cfg_{dest}")
        if v is not None:
            values[dest] = v
    if "seed" in args.explicit or "seed" not in values:
        values["seed"] = args.seed
    if args.budget is not None:
        values["table_budget"] = args.budget
        values["enum_budget"] = args.budget
    return ExperimentConfig.from_mapping(values)


def _experiment(runner):
    def run(args):
        rep = runner(_experiment_config(args))
        return rep.records(), rep.passed
    return run


def cmd_free_pair(args):
    S = _genset(args.gens, args.p, None, args.seed)
    cert = free_pair_search(S, args.N, args.L, args.max_pairs)
    params = {"p": args.p, "gens": [g.to_text() for g in S], "N": args.N, "L": args.L, "max_pairs": args.max_pairs}
    return _single("free-pair", params, cert.as_dict(), args.seed), True


COMMANDS = {
    "factor": cmd_factor,
    "admissible": cmd_admissible,
    "irreducible": cmd_irreducible,
    "girth": cmd_girth,
    "spectrum": cmd_spectrum,
    "census": cmd_census,
    "walk": cmd_walk,
    "small-sieve": _experiment(run_small_sieve),
    "big-sieve": _experiment(run_big_sieve),
    "survey": _experiment(run_expander_survey),
    "free-pair": cmd_free_pair,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    args.explicit = {k for k in GLOBAL_DEFAULTS if hasattr(args, k)}
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    t0 = time.perf_counter()
    try:
        records, ok = COMMANDS[args.command](args)
    except BudgetExceeded as e:
        sys.stderr.write(f"budget exceeded: {e}\n")
        return EXIT_CHECK
    except (UsageError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    records.append({"schema": 1, "type": "meta",
                    "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                    "wall_clock": time.perf_counter() - t0})
    text = _csv(records) if args.format == "csv" else "".join(_dumps(r) + "\n" for r in records)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not ok:
        sys.stderr.write("check failed\n")
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
