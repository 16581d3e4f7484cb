"""Percolation on graphs with independently, randomly oriented edges."""

__version__ = "0.1.0"

from ._backend import NAME as BACKEND
from .graph import (
    Edge,
    Graph,
    GraphError,
    Orientation,
    VertexSet,
    binary_tree_graph,
    load_graph,
    parse_graph,
    reachable_from,
    reverse_graph,
    sample_orientation,
)
from .rng import SplitMixStream
