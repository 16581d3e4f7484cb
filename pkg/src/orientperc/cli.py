"""``orientperc`` command line.

Exit codes: 0 success, 1 invalid input, 2 a positive-association or
positive-relation check failed.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from datetime import datetime, timezone
from fractions import Fraction

from . import __version__
from .exact import (TOLERANCE, check_positive_association,
                    check_positive_relation, enumerate_joint, free_vertices, joint,
                    marginal, pair_covariance, windows)
from .graph import load_graph
from .montecarlo import (DEFAULT_MAX_HEIGHT, METHODS, histogram_csv_rows,
                         run_graph_experiment, run_tree_experiment)
from .tree import (TreeParams, analyze, fixed_point, kappa,
                   max_level_cdf, max_level_window_probability, nint)
from .upsets import MAX_GROUND

EXIT_OK, EXIT_INVALID, EXIT_CHECK_FAILED = 0, 1, 2


class UsageError(ValueError):
    pass


def _bias(text):
    try:
        p = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a probability: {text!r}")
    if not 0 <= p <= 1:
        raise argparse.ArgumentTypeError(f"bias must lie in [0, 1], got {text}")
    return p


def _sources(text):
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"sources must be vertex ids, got {text!r}")


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _num(x):
    """Rationals as "a/b" strings, everything else as float."""
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return float(x)


def _emit(args, payload=None, rows=None, header=None):
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        text = buf.getvalue()
    else:
        payload = dict(payload)
        payload["code_version"] = __version__
        if not args.no_timestamp:
            payload["timestamp"] = datetime.now(timezone.utc).isoformat()
        text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("-" + n if len(n) == 1 else "--" + n for n in missing)
        raise UsageError(f"{args.command} needs {flags}")


def _tree_params(args, float_bias=True):
    _require(args, "n", "p")
    p = float(args.p) if float_bias else args.p
    return TreeParams(args.n, p)


# commands

def _worst(reports):
    return min(reports, key=lambda r: r.min_covariance)


def cmd_check(args):
    _require(args, "graph", "sources")
    graph = load_graph(args.graph)
    src = graph.vertex_set(args.sources)
    dist = enumerate_joint(graph, src, workers=args.threads)
    V = graph.vertex_count
    free = free_vertices(dist)
    tol = 0 if dist.exact else TOLERANCE
    assoc, rel = [], []
    for w in windows(free, args.window_size):
        assoc.append(check_positive_association(dist, w, tol))
        rel.append(check_positive_relation(dist, w, tol))
    pairs, cov_min, best = [], None, None
    for i in range(V):
        for j in range(i + 1, V):
            c = pair_covariance(dist, i, j)
            pairs.append({"pair": [i, j], "joint": _num(joint(dist, i, j)),
                          "covariance": _num(c)})
            # pairs involving a source or a constant vertex have covariance 0 trivially
            if i in free and j in free and (best is None or c < best):
                best, cov_min = c, pairs[-1]

    def summary(reports, kind):
        if not reports:
            return {"kind": kind, "passed": True, "windows": 0, "checks_performed": 0,
                    "min_covariance": None, "witness": None}
        worst = _worst(reports).to_json()
        worst.update(passed=all(r.passed for r in reports), windows=len(reports),
                     checks_performed=sum(r.checks_performed for r in reports))
        return worst

    a_sum, r_sum = summary(assoc, "association"), summary(rel, "relation")
    passed = a_sum["passed"] and r_sum["passed"]
    marg = [_num(marginal(dist, i)) for i in range(V)]
    _emit(args, {
        "command": "check",
        "graph": args.graph,
        "vertex_count": V,
        "edge_count": graph.edge_count,
        "sources": src.to_list(),
        "arithmetic": "rational" if dist.exact else "double",
        "marginals": marg,
        "pairs": pairs,
        "min_pair_covariance": cov_min,
        "free_vertices": free.to_list(),
        "window_size": min(args.window_size, len(free)),
        "association": a_sum,
        "relation": r_sum,
        "passed": passed,
    }, rows=[(i, m) for i, m in enumerate(marg)], header=("vertex", "marginal"))
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def cmd_tree_analytic(args):
    params = _tree_params(args, float_bias=False)
    exact_p = params.bias
    params = TreeParams(params.height, float(exact_p))
    a = analyze(params)
    rows = [(k, float(r), float(al), float(pk), float(e)) for k, r, al, pk, e in a.rows()]
    out = {
        "command": "tree-analytic",
        "n": params.height,
        "p": params.bias,
        "expected_downwards": float(a.expected_downwards),
        "expected_cluster": float(a.expected_cluster),
        "fixed_point": float(fixed_point(exact_p)),
        "kappa": None,
        "table": [dict(zip(("k", "rho", "alpha", "pi", "expected_wet_at_level"), r))
                  for r in rows],
    }
    if 0 < params.bias < 1 and params.height >= 1:
        kap = kappa(params)
        m = nint(kap)
        levels = sorted({min(max(k, 1), params.height) for k in (m - 1, m, m + 1)})
        out.update({
            "kappa": kap,
            "nint_kappa": m,
            "predicted_max_levels": [m - 1, m],
            "max_level_probability": max_level_window_probability(params, (m - 1, m),
                                                                  a.rho),
            "max_level_cdf": {str(k): max_level_cdf(params, k, a.rho) for k in levels},
        })
    _emit(args, out, rows=rows, header=("k", "rho", "alpha", "pi", "expected_wet_at_level"))
    return EXIT_OK


def cmd_tree_simulate(args):
    params = _tree_params(args)
    _require(args, "samples")
    s = run_tree_experiment(params, args.samples, args.seed, args.threads, args.method,
                            args.max_height)
    out = {"command": "tree-simulate"}
    out.update(s.to_json())
    out["downwards_histogram"] = {str(k): v for k, v in sorted(s.downwards_histogram.items())}
    table = {"histogram": s.histogram, "downwards": s.downwards_histogram,
             "max-level": s.max_level_counts}[args.table]
    rows = histogram_csv_rows(table) if args.table != "max-level" else sorted(table.items())
    _emit(args, out, rows=rows, header=("value", "count"))
    return EXIT_OK


def cmd_graph_simulate(args):
    _require(args, "graph", "sources", "samples")
    graph = load_graph(args.graph)
    src = graph.vertex_set(args.sources)
    s = run_graph_experiment(graph, src, args.samples, args.seed, args.threads)
    out = {"command": "graph-simulate", "graph": args.graph}
    out.update(s.to_json())
    rows = [(i, c, c / s.samples) for i, c in enumerate(s.wet_counts)]
    _emit(args, out, rows=rows, header=("vertex", "wet_count", "frequency"))
    return EXIT_OK


def cmd_poisson(args):
    params = _tree_params(args)
    _require(args, "samples")
    # scipy is only needed here; keep it off the other commands' start-up path
    from .poisson import (PoissonError, diagnose_histogram, poisson_diagnostics,
                          sum_pi_squared, synthetic_poisson_histogram)
    if args.synthetic:
        a = analyze(params)
        lam = float(a.expected_cluster)
        if not lam > 0:
            raise PoissonError("lambda <= 0")
        hist = synthetic_poisson_histogram(lam, args.samples, args.seed)
        n = args.samples
        s1 = sum(k * c for k, c in hist.items())
        s2 = sum(k * k * c for k, c in hist.items())
        var = float((s2 - Fraction(s1 * s1, n)) / (n - 1)) if n > 1 else 0.0
        diag = diagnose_histogram(hist, n, lam, sum_pi_squared(params, a), var,
                                  "synthetic-poisson")
        diag.meta = {"n": params.height, "p": params.bias, "samples": n, "seed": args.seed,
                     "generator": "numpy-pcg64"}
    else:
        diag = poisson_diagnostics(params, args.samples, args.seed, args.threads, args.method)
    out = {"command": "poisson"}
    out.update(diag.to_json())
    out["synthetic"] = bool(args.synthetic)
    out["synthetic_tv_limit"] = 2 * math.sqrt(diag.lam / diag.samples)
    _emit(args, out)
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "tree-analytic": cmd_tree_analytic,
    "tree-simulate": cmd_tree_simulate,
    "graph-simulate": cmd_graph_simulate,
    "poisson": cmd_poisson,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", help="graph file ('vertices N' then 'edge u v [p]' lines)")
    common.add_argument("--sources", type=_sources, help="source vertex ids, e.g. 0 or 0,3")
    common.add_argument("-n", type=int, help="tree height")
    common.add_argument("-p", type=_bias, help="orientation bias, decimal or a/b")
    common.add_argument("--samples", type=_positive)
    common.add_argument("--seed", type=lambda s: int(s, 0), default=0)
    common.add_argument("--threads", type=_positive, default=os.cpu_count() or 1)
    common.add_argument("--method", choices=METHODS, default="sparse",
                        help="tree sampler (default: sparse)")
    common.add_argument("--max-height", type=int, default=DEFAULT_MAX_HEIGHT,
                        help="memory cap on the tree height")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--table", choices=("histogram", "downwards", "max-level"),
                        default="histogram", help="CSV table for tree-simulate")
    common.add_argument("--window-size", type=int, default=MAX_GROUND,
                        help=f"vertices per association window (at most {MAX_GROUND})")
    common.add_argument("--synthetic", action="store_true",
                        help="poisson: score an exact Poisson sample instead of a simulation")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--no-timestamp", action="store_true")

    parser = argparse.ArgumentParser(prog="orientperc",
                                     description="Percolation on randomly oriented graphs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not 1 <= args.window_size <= MAX_GROUND:
        parser.error(f"--window-size must be in 1..{MAX_GROUND}")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:  # every domain error is a ValueError
        print(f"orientperc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
