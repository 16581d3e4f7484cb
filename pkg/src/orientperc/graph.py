"""Finite simple graphs with independently biased edge orientations.

Vertices are the dense integers ``0 .. N-1``.  Edge order is load order and is
also the order in which orientation draws are consumed.
"""

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

import numpy as np

from .rng import bernoulli_threshold


class GraphError(ValueError):
    """Invalid graph, orientation or vertex set."""


class Edge(NamedTuple):
    u: int
    v: int
    bias: float  # P(edge oriented u -> v)


@dataclass(frozen=True)
class VertexSet:
    """Set of vertex ids stored as an integer bitmask."""

    mask: int
    vertex_count: int

    def __post_init__(self):
        if self.mask < 0 or self.mask >> self.vertex_count:
            raise GraphError(f"vertex set {bin(self.mask)} has ids >= {self.vertex_count}")

    @classmethod
    def of(cls, members: Iterable[int], vertex_count: int) -> "VertexSet":
        mask = 0
        for i in members:
            i = int(i)
            if not 0 <= i < vertex_count:
                raise GraphError(f"vertex {i} out of range 0..{vertex_count - 1}")
            mask |= 1 << i
        return cls(mask, vertex_count)

    def __contains__(self, i):
        return bool(self.mask >> i & 1)

    def __iter__(self):
        m, i = self.mask, 0
        while m:
            if m & 1:
                yield i
            m >>= 1
            i += 1

    def __len__(self):
        return bin(self.mask).count("1")

    def issubset(self, other: "VertexSet") -> bool:
        return self.mask & ~other.mask == 0

    def to_list(self):
        return list(self)


@dataclass(frozen=True)
class Orientation:
    """One boolean per edge, in graph edge order; True means ``u -> v``."""

    bits: tuple

    @property
    def mask(self):
        m = 0
        for e, b in enumerate(self.bits):
            if b:
                m |= 1 << e
        return m

    @classmethod
    def from_mask(cls, mask, edge_count):
        return cls(tuple(bool(mask >> e & 1) for e in range(edge_count)))

    def __len__(self):
        return len(self.bits)


@dataclass(frozen=True)
class Graph:
    vertex_count: int
    edges: tuple

    def __post_init__(self):
        if not isinstance(self.vertex_count, int) or self.vertex_count < 1:
            raise GraphError(f"vertex_count must be a positive integer, got {self.vertex_count!r}")
        edges = tuple(Edge(int(u), int(v), float(b)) for u, v, b in self.edges)
        object.__setattr__(self, "edges", edges)
        seen = set()
        for idx, (u, v, b) in enumerate(edges):
            _check_edge(u, v, b, self.vertex_count, seen, f"edge {idx}")

    @property
    def edge_count(self):
        return len(self.edges)

    def biases(self):
        return [e.bias for e in self.edges]

    def endpoints(self):
        """Edge endpoints as two int64 arrays ``(u, v)``."""
        if not self.edges:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        arr = np.array([(e.u, e.v) for e in self.edges], dtype=np.int64)
        return arr[:, 0].copy(), arr[:, 1].copy()

    def vertex_set(self, members):
        return VertexSet.of(members, self.vertex_count)

    def exact_biases(self):
        """Biases as exact Fractions (every double is a dyadic rational)."""
        return [Fraction(e.bias) for e in self.edges]


def _check_edge(u, v, bias, n, seen, where):
    if not (0 <= u < n and 0 <= v < n):
        raise GraphError(f"{where}: vertex id out of range 0..{n - 1}")
    if u == v:
        raise GraphError(f"{where}: self-loop at vertex {u}")
    key = (min(u, v), max(u, v))
    if key in seen:
        raise GraphError(f"{where}: duplicate edge {{{u}, {v}}}")
    if not 0.0 <= bias <= 1.0:
        raise GraphError(f"{where}: bias {bias} not in [0, 1]")
    seen.add(key)


def parse_graph(text: str) -> Graph:
    """Parse the line-oriented graph format.

    ::

        vertices N
        edge u v [p]

    Blank lines and ``#`` comments are ignored.  ``p`` defaults to 0.5 and may
    be written as a decimal or as a fraction ``a/b``.
    """
    n = None
    edges = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        where = f"line {lineno}"
        if parts[0] == "vertices":
            if n is not None:
                raise GraphError(f"{where}: repeated 'vertices' line")
            if len(parts) != 2:
                raise GraphError(f"{where}: expected 'vertices N'")
            try:
                n = int(parts[1])
            except ValueError:
                raise GraphError(f"{where}: bad vertex count {parts[1]!r}") from None
            if n < 1:
                raise GraphError(f"{where}: vertex count must be positive")
        elif parts[0] == "edge":
            if n is None:
                raise GraphError(f"{where}: 'edge' before 'vertices'")
            if len(parts) not in (3, 4):
                raise GraphError(f"{where}: expected 'edge u v [p]'")
            try:
                u, v = int(parts[1]), int(parts[2])
                bias = float(Fraction(parts[3])) if len(parts) == 4 else 0.5
            except (ValueError, ZeroDivisionError):
                raise GraphError(f"{where}: cannot parse {line!r}") from None
            _check_edge(u, v, bias, n, seen, where)
            edges.append(Edge(u, v, bias))
        else:
            raise GraphError(f"{where}: unknown directive {parts[0]!r}")
    if n is None:
        raise GraphError("missing 'vertices N' line")
    return Graph(n, tuple(edges))


def load_graph(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def format_graph(graph: Graph) -> str:
    lines = [f"vertices {graph.vertex_count}"]
    lines += [f"edge {u} {v} {b!r}" for u, v, b in graph.edges]
    return "\n".join(lines) + "\n"


def sample_orientation(graph: Graph, rng) -> Orientation:
    """Orient every edge independently, consuming one draw per edge in edge order.

    ``rng`` is a :class:`~orientperc.rng.SplitMixStream`.
    """
    if not graph.edges:
        return Orientation(())
    draws = rng.block(graph.edge_count) >> np.uint64(11)
    thr = np.array([bernoulli_threshold(b) for b in graph.biases()], dtype=np.uint64)
    return Orientation(tuple(bool(x) for x in draws < thr))


def out_neighbours(graph: Graph, orientation: Orientation):
    if len(orientation) != graph.edge_count:
        raise GraphError(
            f"orientation has {len(orientation)} bits, graph has {graph.edge_count} edges")
    out = [[] for _ in range(graph.vertex_count)]
    for (u, v, _), forward in zip(graph.edges, orientation.bits):
        if forward:
            out[u].append(v)
        else:
            out[v].append(u)
    return out


def reachable_from(graph: Graph, orientation: Orientation, sources: VertexSet) -> VertexSet:
    """Vertices reachable by an oriented path from some source (multi-source BFS)."""
    if sources.mask == 0:
        raise GraphError("empty source")
    if sources.vertex_count != graph.vertex_count:
        raise GraphError("source set built for a different vertex count")
    out = out_neighbours(graph, orientation)
    seen = sources.mask
    queue = deque(sources)
    while queue:
        u = queue.popleft()
        for w in out[u]:
            if not seen >> w & 1:
                seen |= 1 << w
                queue.append(w)
    return VertexSet(seen, graph.vertex_count)


def reverse_graph(graph: Graph) -> Graph:
    """Same edges, each bias replaced by ``1 - bias``."""
    return Graph(graph.vertex_count, tuple(Edge(u, v, 1.0 - b) for u, v, b in graph.edges))


# small named graphs

def path_graph(k, p=0.5):
    return Graph(k, tuple(Edge(i, i + 1, p) for i in range(k - 1)))


def star_graph(leaves, p=0.5):
    return Graph(leaves + 1, tuple(Edge(0, i, p) for i in range(1, leaves + 1)))


def cycle_graph(k, p=0.5):
    return Graph(k, tuple(Edge(i, (i + 1) % k, p) for i in range(k)))


def complete_graph(k, p=0.5):
    return Graph(k, tuple(Edge(i, j, p) for i in range(k) for j in range(i + 1, k)))


def triangle(p=0.5):
    """Vertices s=0, a=1, b=2; edges sa, sb, ab."""
    return Graph(3, (Edge(0, 1, p), Edge(0, 2, p), Edge(1, 2, p)))


def binary_tree_graph(n, p=0.5):
    """Complete binary tree of height ``n`` as a Graph.

    Vertex ``i`` is heap index ``i + 1`` (root 0, children of heap ``h`` are
    ``2h`` and ``2h + 1``).  Edge ``c - 2`` joins heap child ``c`` to its parent
    and is stored as ``(child, parent, p)``, so ``p`` is the probability of
    pointing towards the root.
    """
    size = (1 << (n + 1)) - 1
    edges = tuple(Edge(c - 1, c // 2 - 1, p) for c in range(2, size + 1))
    return Graph(size, edges)


def tree_leaves(n):
    """Vertex ids of the leaves of :func:`binary_tree_graph` ``(n)``."""
    return range((1 << n) - 1, (1 << (n + 1)) - 1)


def corpus(p=0.5):
    """The named small graphs used by the association suite."""
    return {
        "P3": path_graph(3, p),
        "P4": path_graph(4, p),
        "K1,3": star_graph(3, p),
        "triangle": triangle(p),
        "C4": cycle_graph(4, p),
        "K4": complete_graph(4, p),
        "T2": binary_tree_graph(2, p),
    }
