"""Seeded Monte Carlo for percolation on T_n and on general graphs.

Replica ``r`` of an experiment with seed ``s`` draws from the counter stream
``(s, r)`` and nothing else, so a summary depends only on
``(params, samples, seed, method)``: not on the thread count or on how the
replicas were batched.  Aggregates are computed from exact integer
histograms.
"""

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

from . import __version__
from ._backend import NAME as BACKEND, kernels
from .graph import Graph, VertexSet, reachable_from, sample_orientation
from .rng import (GAMMA, GENERATOR_NAME, MASK64, SplitMixStream, bernoulli_threshold,
                  mix64_array, stream_keys)
from .tree import TreeParams

DEFAULT_MAX_HEIGHT = 26
CHUNK = 1 << 12
METHODS = ("sparse", "dense")


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class TreeRun:
    cluster_size: int
    downwards_size: int
    max_level: int
    root_wet: bool


def _moments(hist):
    """Exact mean and unbiased variance of an integer histogram."""
    n = sum(hist.values())
    s1 = sum(k * c for k, c in hist.items())
    s2 = sum(k * k * c for k, c in hist.items())
    mean = Fraction(s1, n)
    var = (s2 - s1 * mean) / (n - 1) if n > 1 else Fraction(0)
    return float(mean), float(var)


@dataclass
class MCSummary:
    height: int
    bias: float
    samples: int
    seed: int
    method: str
    histogram: dict
    downwards_histogram: dict
    max_level_counts: dict
    root_wet_count: int
    mean_cluster: float = field(init=False)
    var_cluster: float = field(init=False)
    mean_downwards: float = field(init=False)
    var_downwards: float = field(init=False)

    def __post_init__(self):
        self.mean_cluster, self.var_cluster = _moments(self.histogram)
        self.mean_downwards, self.var_downwards = _moments(self.downwards_histogram)

    @property
    def root_wet_frequency(self):
        return self.root_wet_count / self.samples

    def level_frequency(self, levels):
        return sum(self.max_level_counts.get(k, 0) for k in levels) / self.samples

    def merge(self, other: "MCSummary") -> "MCSummary":
        """Combine summaries of disjoint replica sets of the same experiment."""
        if (self.height, self.bias, self.method) != (other.height, other.bias, other.method):
            raise SimulationError("cannot merge summaries of different experiments")
        return MCSummary(
            self.height, self.bias, self.samples + other.samples, self.seed, self.method,
            dict(Counter(self.histogram) + Counter(other.histogram)),
            dict(Counter(self.downwards_histogram) + Counter(other.downwards_histogram)),
            dict(Counter(self.max_level_counts) + Counter(other.max_level_counts)),
            self.root_wet_count + other.root_wet_count,
        )

    def metadata(self):
        return {
            "n": self.height,
            "p": self.bias,
            "samples": self.samples,
            "seed": self.seed,
            "method": self.method,
            "generator": GENERATOR_NAME,
            "backend": BACKEND,
            "code_version": __version__,
        }

    def to_json(self):
        out = self.metadata()
        out.update({
            "mean_cluster": self.mean_cluster,
            "var_cluster": self.var_cluster,
            "mean_downwards": self.mean_downwards,
            "var_downwards": self.var_downwards,
            "root_wet_frequency": self.root_wet_frequency,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "max_level_counts": {str(k): v for k, v in sorted(self.max_level_counts.items())},
        })
        return out


def histogram_csv_rows(hist, cap=1 << 16):
    """``(value, count)`` rows; values above ``cap`` go to power-of-two buckets
    labelled by their lower edge."""
    rows = Counter()
    for k, c in hist.items():
        if k > cap:
            k = 1 << (int(k).bit_length() - 1)
        rows[k] += c
    return sorted(rows.items())


def _check_tree(params, max_height, method):
    if params.height < 1:
        raise SimulationError("tree simulation needs n >= 1")
    if params.height > max_height:
        raise SimulationError(
            f"n={params.height} exceeds the memory cap n <= {max_height} (override max_height)")
    if method not in METHODS:
        raise SimulationError(f"unknown method {method!r}; expected one of {METHODS}")


def simulate_tree_once(params: TreeParams, rng, method="sparse") -> TreeRun:
    """One replica on T_n, drawing from ``rng`` (a SplitMixStream).

    The stream is advanced past every draw the replica could use.
    """
    _check_tree(params, DEFAULT_MAX_HEIGHT, method)
    key = (rng.key + rng.counter * GAMMA) & MASK64
    res = kernels.tree_simulate(params.height, float(params.bias), method == "dense",
                                np.array([key], dtype=np.uint64), np.zeros(0, np.int64))
    rng.counter += (1 << (params.height + 1)) - 1
    cluster, down, lvl, root, _ = res
    return TreeRun(int(cluster[0]), int(down[0]), int(lvl[0]), bool(root[0]))


def _tree_chunk(params, method, seed, lo, hi, watch):
    keys = stream_keys(seed, lo, hi)
    return kernels.tree_simulate(params.height, float(params.bias), method == "dense",
                                 keys, watch)


def _chunks(samples):
    return [(a, min(a + CHUNK, samples)) for a in range(0, samples, CHUNK)]


def _map_chunks(fn, samples, threads):
    bounds = _chunks(samples)
    if threads <= 1 or len(bounds) == 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))


def _count(values):
    keys, counts = np.unique(values, return_counts=True)
    return Counter(dict(zip(keys.tolist(), counts.tolist())))


def run_tree_experiment(params: TreeParams, samples: int, seed: int = 0, threads: int = 1,
                        method="sparse", max_height=DEFAULT_MAX_HEIGHT) -> MCSummary:
    """Aggregate ``samples`` independent replicas of percolation on T_n."""
    if samples < 1:
        raise SimulationError("samples must be >= 1")
    _check_tree(params, max_height, method)
    seed = int(seed) & MASK64
    empty = np.zeros(0, np.int64)
    parts = _map_chunks(lambda a, b: _tree_chunk(params, method, seed, a, b, empty),
                        samples, threads)
    hist, dhist, lvl = Counter(), Counter(), Counter()
    root = 0
    for cluster, down, maxlvl, rootwet, _ in parts:
        hist += _count(cluster)
        dhist += _count(down)
        lvl += _count(maxlvl)
        root += int(rootwet.sum())
    return MCSummary(params.height, params.bias, samples, seed, method,
                     dict(hist), dict(dhist), dict(lvl), root)


def sample_tree_indicators(params: TreeParams, vertices, samples: int, seed: int = 0,
                           threads: int = 1, method="sparse"):
    """Bidirectional wetness of the given heap indices, one row per replica."""
    _check_tree(params, DEFAULT_MAX_HEIGHT, method)
    watch = np.asarray(list(vertices), dtype=np.int64)
    size = 1 << (params.height + 1)
    if len(watch) and (watch.min() < 1 or watch.max() >= size):
        raise SimulationError("heap index out of range")
    parts = _map_chunks(lambda a, b: _tree_chunk(params, method, seed, a, b, watch),
                        samples, threads)
    return np.concatenate([p[4] for p in parts]).astype(bool)


# general graphs

@dataclass
class GraphMCSummary:
    samples: int
    seed: int
    sources: list
    wet_counts: list
    pair_counts: dict = field(default_factory=dict)

    @property
    def frequencies(self):
        return [c / self.samples for c in self.wet_counts]

    def to_json(self):
        return {
            "samples": self.samples,
            "seed": self.seed,
            "sources": self.sources,
            "generator": GENERATOR_NAME,
            "backend": BACKEND,
            "code_version": __version__,
            "wet_counts": self.wet_counts,
            "wet_frequency": self.frequencies,
        }


def simulate_graph_once(graph: Graph, sources: VertexSet, rng) -> VertexSet:
    """Sample an orientation from ``rng`` and return the wet set."""
    return reachable_from(graph, sample_orientation(graph, rng), sources)


def graph_wet_masks(graph: Graph, sources: VertexSet, samples: int, seed: int = 0,
                    threads: int = 1):
    """Wet-set bitmasks of replicas ``0 .. samples-1``.

    Replica ``r`` equals ``simulate_graph_once(graph, sources, SplitMixStream(seed, r))``.
    """
    if sources.mask == 0:
        raise SimulationError("empty source")
    seed = int(seed) & MASK64
    E, V = graph.edge_count, graph.vertex_count
    if E > 64 or V > 64:
        return [simulate_graph_once(graph, sources, SplitMixStream(seed, r)).mask
                for r in range(samples)]
    thr = np.array([bernoulli_threshold(b) for b in graph.biases()], dtype=np.uint64)
    eu, ev = graph.endpoints()
    weights = np.uint64(1) << np.arange(E, dtype=np.uint64)

    def chunk(a, b):
        keys = stream_keys(seed, a, b)
        idx = np.arange(1, E + 1, dtype=np.uint64) * np.uint64(GAMMA)
        draws = mix64_array(keys[:, None] + idx[None, :]) >> np.uint64(11)
        orient = ((draws < thr[None, :]).astype(np.uint64) * weights[None, :]).sum(
            axis=1, dtype=np.uint64)
        return kernels.reach_masks(V, eu, ev, sources.mask, orient)

    return np.concatenate(_map_chunks(chunk, samples, threads)).tolist()


def run_graph_experiment(graph: Graph, sources: VertexSet, samples: int, seed: int = 0,
                         threads: int = 1) -> GraphMCSummary:
    masks = graph_wet_masks(graph, sources, samples, seed, threads)
    counts = [0] * graph.vertex_count
    for m, c in Counter(masks).items():
        for i in range(graph.vertex_count):
            if m >> i & 1:
                counts[i] += c
    return GraphMCSummary(samples, int(seed) & MASK64, sources.to_list(), counts)


def indicator_matrix(runs, vertices):
    """Rows of 0/1 wetness for ``vertices`` from wet sets, bitmasks or a 2-D array."""
    if isinstance(runs, np.ndarray) and runs.ndim == 2:
        return runs[:, list(vertices)].astype(float)
    rows = []
    for r in runs:
        m = r.mask if isinstance(r, VertexSet) else int(r)
        rows.append([(m >> v) & 1 for v in vertices])
    return np.array(rows, dtype=float)


def estimate_covariance(runs, i, j) -> float:
    """Unbiased sample covariance of the wetness indicators of ``i`` and ``j``."""
    x = indicator_matrix(runs, [i, j])
    if len(x) < 2:
        raise SimulationError("need at least two runs")
    return float(np.cov(x[:, 0], x[:, 1], ddof=1)[0, 1])


def covariance_standard_error(runs, i, j) -> float:
    """Standard error of :func:`estimate_covariance` (delta method)."""
    x = indicator_matrix(runs, [i, j])
    n = len(x)
    a = x[:, 0] - x[:, 0].mean()
    b = x[:, 1] - x[:, 1].mean()
    prod = a * b
    return float(math.sqrt(prod.var(ddof=1) / n))
