"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Both backends are fed identical inputs; the script also checks that their
outputs agree before reporting a speedup.
"""

import argparse
import time

import numpy as np

from orientperc import _pykernels
from orientperc.graph import VertexSet, binary_tree_graph, tree_leaves
from orientperc.rng import stream_keys

try:
    from orientperc import _ckernels
except ImportError:
    _ckernels = None


def _cases():
    g = binary_tree_graph(3)
    eu, ev = g.endpoints()
    src = VertexSet.of(tree_leaves(3), g.vertex_count).mask
    none = np.zeros(0, np.int64)
    return [
        ("tree sparse n=12 p=0.01 x2000",
         lambda k: k.tree_simulate(12, 0.01, False, stream_keys(1, 0, 2000), none)),
        ("tree sparse n=8 p=0.45 x2000",
         lambda k: k.tree_simulate(8, 0.45, False, stream_keys(1, 0, 2000), none)),
        ("tree dense n=10 p=0.01 x200",
         lambda k: k.tree_simulate(10, 0.01, True, stream_keys(1, 0, 200), none)),
        ("reach T_3, all 2^14 orientations",
         lambda k: k.enumerate_reach(g.vertex_count, eu, ev, src, 0, 1 << 14)),
    ]


def _best(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; timing the python backend only")
    print(f"{'case':36s} {'python':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name, fn in _cases():
        tp, op = _best(lambda: fn(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:36s} {tp:10.4f}")
            continue
        tc, oc = _best(lambda: fn(_ckernels), args.repeat)
        if not _same(op, oc):
            raise SystemExit(f"backends disagree on {name}")
        print(f"{name:36s} {tp:10.4f} {tc:10.4f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
