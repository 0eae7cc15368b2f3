"""Command-line entry point: ``pubgood <subcommand> ...``.

Results are JSON on stdout (or ``--out``). Errors go to stderr as
``pubgood: error[<kind>]: <message>``. Exit codes: 0 success, 1 usage or
parse error, 2 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import distributions as dk
from . import graphs as gk
from .equilibrium import (
    ConvergenceError,
    PriceVector,
    ThresholdVector,
    UnsupportedDistributionError,
    expected_revenue,
    solve_fixed_point,
    verify_equilibrium,
)
from .pricing import (
    myerson_upper_bound,
    price_clique,
    price_d_regular,
    price_uniform_general,
)
from .repro import EXPERIMENTS, run_experiment
from .sequential import (
    Ordering,
    clique_committed_optimum,
    clique_subgame_perfect,
    live_set,
    sequential_revenue,
)
from .simulation import default_workers, simulate
from .worstcase import (
    SizeLimitError,
    hardness_experiment,
    worst_case_revenue_bounds,
    worst_case_revenue_exact,
)

EXIT_OK, EXIT_USAGE, EXIT_INVALID = 0, 1, 2


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int):
        super().__init__(message)
        self.kind = kind
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message, EXIT_USAGE)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_json"):
        return obj.to_json()
    if isinstance(obj, Ordering):
        return list(obj.order)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _clean(obj):
    # JSON has no inf/nan; encode them as strings.
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _emit(doc, out: str | None):
    text = json.dumps(_clean(json.loads(json.dumps(doc, default=_jsonable,
                                                   allow_nan=True))), indent=1)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _read_json(path: str, what: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError("parse", f"cannot read {what} {path}: {exc.strerror}", EXIT_USAGE)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError("parse", f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", EXIT_USAGE)


def _graph(path: str) -> gk.Graph:
    if not Path(path).exists():
        raise CliError("parse", f"graph file not found: {path}", EXIT_USAGE)
    return gk.load_graph(path)


def _cnf(path: str) -> gk.CnfFormula:
    if not Path(path).exists():
        raise CliError("parse", f"cnf file not found: {path}", EXIT_USAGE)
    return gk.load_cnf(path)


def _dist(text: str) -> dk.ValueDistribution:
    try:
        return dk.parse_distribution(text)
    except (dk.DistributionError, OSError) as exc:
        raise CliError("parse", f"bad --dist {text!r}: {exc}", EXIT_USAGE)


def _prices(args, n: int):
    if getattr(args, "price_file", None):
        return PriceVector.of(_read_json(args.price_file, "price file"), n).values
    if args.price is None:
        raise CliError("usage", "need --price or --price-file", EXIT_USAGE)
    return args.price


# -- subcommands -------------------------------------------------------------

def cmd_gen(args):
    params = {k: v for k, v in (("n", args.n), ("d", args.d), ("N", args.N),
                                ("prob", args.prob), ("seed", args.seed),
                                ("leaves", args.leaves)) if v is not None}
    g = gk.generate(args.kind, **params)
    _emit(gk.graph_to_dict(g), args.out)
    return EXIT_OK


def cmd_sat(args):
    spec = gk.ReductionSpec(_cnf(args.cnf), L=args.L)
    _emit(gk.graph_to_dict(gk.sat_reduction(spec)), args.out)
    return EXIT_OK


def cmd_eq(args):
    g = _graph(args.graph)
    dist = _dist(args.dist)
    prices = _prices(args, g.n)
    try:
        t = solve_fixed_point(g, dist, prices, damping=args.damping, max_iter=args.max_iter)
    except ConvergenceError as exc:
        raise CliError("convergence", str(exc), EXIT_INVALID)
    check = verify_equilibrium(g, dist, prices, t)
    report = expected_revenue(prices, t, dist)
    doc = report.to_json()
    doc["verification"] = check
    if g.n > 0 and g.num_edges == g.n * (g.n - 1) // 2:
        doc["annotations"]["myerson_upper_bound"] = myerson_upper_bound(dist, g.n)
    _emit(doc, args.out)
    return EXIT_OK if check["valid"] else EXIT_INVALID


def cmd_price(args):
    dist = _dist(args.dist)
    if args.setting == "clique":
        rec = price_clique(dist, _need(args.n, "--n"))
    elif args.setting == "d_regular":
        rec = price_d_regular(dist, _need(args.d, "--d"))
    else:
        rec = price_uniform_general(dist)
    _emit(rec.to_json(), args.out)
    return EXIT_OK


def _need(value, flag):
    if value is None:
        raise CliError("usage", f"{flag} is required for this setting", EXIT_USAGE)
    return value


def cmd_worstcase(args):
    g = _graph(args.graph)
    if args.bounds:
        res = worst_case_revenue_bounds(g, args.p)
    else:
        res = worst_case_revenue_exact(g, args.p)
    _emit(res.to_json(), args.out)
    return EXIT_OK


def cmd_hardness(args):
    res = hardness_experiment(gk.ReductionSpec(_cnf(args.cnf), L=args.L))
    _emit(res, args.out)
    return EXIT_OK if res["verdict"] != "inconsistent" and res["gadget_integral"] else EXIT_INVALID


def cmd_seq(args):
    g = _graph(args.graph)
    ordering = Ordering(tuple(_read_json(args.ordering, "ordering")) if args.ordering
                        else tuple(range(g.n)))
    dist = _dist(args.dist)
    res = sequential_revenue(g, ordering, dist, args.p)
    res["live_set"] = live_set(g, ordering)
    res["ordering"] = list(ordering.order)
    _emit(res, args.out)
    return EXIT_OK


def cmd_seq_clique(args):
    if args.commit:
        res = clique_committed_optimum(args.n, restarts=args.restarts, seed=args.seed,
                                       workers=args.workers or 1)
        doc = res["policy"].to_json()
        doc["restart_revenues"] = res["restart_revenues"]
    else:
        doc = clique_subgame_perfect(args.n).to_json()
    _emit(doc, args.out)
    return EXIT_OK


def cmd_sim(args):
    g = _graph(args.graph)
    dist = _dist(args.dist)
    doc = _read_json(args.thresholds, "thresholds")
    if isinstance(doc, dict):  # accept the output of `eq` directly
        doc = doc.get("thresholds", [])
    t = ThresholdVector.from_sequence(doc)
    if len(t) != g.n:
        raise CliError("validation", f"{len(t)} thresholds for {g.n} nodes", EXIT_INVALID)
    prices = _prices(args, g.n)
    res = simulate(g, dist, prices, t, args.trials, seed=args.seed,
                   keep_outcomes=bool(args.csv), workers=args.workers or default_workers())
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trial", "revenue", "welfare_public", "welfare_hipster", "buyers"])
            k = 0
            for out in res.pop("outcomes"):
                for r, wp, wh, b in zip(out.revenue_realized, out.welfare_public,
                                        out.welfare_hipster, out.buyers):
                    w.writerow([k, r, wp, wh, " ".join(map(str, np.flatnonzero(b)))])
                    k += 1
    _emit(res, args.out)
    return EXIT_OK


def cmd_repro(args):
    params = {"seed": args.seed}
    if args.N is not None:
        params["sizes"] = (args.N,)
    if args.p is not None:
        params["p"] = args.p
    if args.trials is not None:
        params["trials"] = args.trials
    if args.workers:
        params["workers"] = args.workers
    exp = run_experiment(args.name, **params)
    if args.format == "csv":
        buf = io.StringIO()
        keys = list(dict.fromkeys(k for row in exp.rows for k in row))
        w = csv.DictWriter(buf, fieldnames=keys)
        w.writeheader()
        w.writerows(exp.rows)
        if args.out:
            Path(args.out).write_text(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
    else:
        _emit(exp.to_json(), args.out)
    for c in exp.checks:
        print(c.line(), file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK if exp.passed else EXIT_INVALID


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pubgood", description="Pricing locally public goods on networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--out", help="write JSON here instead of stdout")
        return sp

    sp = add("gen", cmd_gen, "generate a graph")
    sp.add_argument("--kind", required=True, choices=sorted(gk._GENERATORS))
    sp.add_argument("--n", type=int)
    sp.add_argument("--d", type=int)
    sp.add_argument("--N", type=int)
    sp.add_argument("--prob", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--leaves", type=int)

    sp = add("sat", cmd_sat, "build the 3-SAT reduction graph")
    sp.add_argument("--cnf", required=True)
    sp.add_argument("--L", type=int, default=1)

    sp = add("eq", cmd_eq, "solve for an equilibrium and report revenue")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--dist", default="uniform:0,1")
    sp.add_argument("--price", type=float)
    sp.add_argument("--price-file")
    sp.add_argument("--damping", type=float, default=0.5)
    sp.add_argument("--max-iter", type=int, default=100_000)

    sp = add("price", cmd_price, "recommend a uniform price")
    sp.add_argument("--setting", required=True, choices=["clique", "d_regular", "uniform_general"])
    sp.add_argument("--n", type=int)
    sp.add_argument("--d", type=int)
    sp.add_argument("--dist", default="uniform:0,1")

    sp = add("worstcase", cmd_worstcase, "worst-case equilibrium revenue (uniform values)")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--p", type=float, required=True)
    mode = sp.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", default=True)
    mode.add_argument("--bounds", action="store_true")

    sp = add("hardness", cmd_hardness, "min sum x on a 3-SAT reduction graph")
    sp.add_argument("--cnf", required=True)
    sp.add_argument("--L", type=int, default=1)

    sp = add("seq", cmd_seq, "sequential sale under a fixed ordering")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--ordering")
    sp.add_argument("--dist", default="uniform:0,1")
    sp.add_argument("--p", type=float, required=True)

    sp = add("seq-clique", cmd_seq_clique, "sequential clique pricing policy")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--commit", action="store_true")
    sp.add_argument("--restarts", type=int, default=4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int)

    sp = add("sim", cmd_sim, "Monte Carlo play against fixed thresholds")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--thresholds", required=True)
    sp.add_argument("--dist", default="uniform:0,1")
    sp.add_argument("--price", type=float)
    sp.add_argument("--price-file")
    sp.add_argument("--trials", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--csv", help="write per-trial outcomes here")

    sp = add("repro", cmd_repro, "run a named acceptance experiment")
    sp.add_argument("name", choices=sorted(EXPERIMENTS))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.add_argument("--N", type=int, help="pentagon gadget size")
    sp.add_argument("--p", type=float)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--workers", type=int)
    return parser


_ERROR_KINDS = (
    (CliError, None, None),
    (gk.GraphFormatError, "parse", EXIT_USAGE),
    (UnsupportedDistributionError, "unsupported", EXIT_INVALID),
    (dk.DistributionError, "validation", EXIT_INVALID),
    (SizeLimitError, "size-limit", EXIT_INVALID),
    (FileNotFoundError, "parse", EXIT_USAGE),
    ((ValueError, KeyError, ArithmeticError, AssertionError), "validation", EXIT_INVALID),
)


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:
        for types, kind, code in _ERROR_KINDS:
            if isinstance(exc, types):
                if isinstance(exc, CliError):
                    kind, code = exc.kind, exc.code
                msg = exc.args[0] if exc.args else type(exc).__name__
                print(f"pubgood: error[{kind}]: {msg}", file=sys.stderr)
                return code
        raise


def main() -> None:
    sys.exit(run())
