"""Complete families of up-sets of the Boolean cube {0,1}^k.

A point of the cube is an integer whose bit ``j`` is coordinate ``j``; an
up-set is stored as an integer whose bit ``x`` is set when point ``x`` belongs
to it.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_GROUND = 5


@dataclass(frozen=True)
class UpSetFamily:
    ground_size: int
    upsets: tuple

    def __len__(self):
        return len(self.upsets)

    @property
    def n_points(self):
        return 1 << self.ground_size

    def indicator_matrix(self, dtype=bool):
        """Rows are up-sets, columns are cube points."""
        pts = np.arange(self.n_points, dtype=object)
        rows = [[(u >> int(x)) & 1 for x in pts] for u in self.upsets]
        return np.array(rows, dtype=dtype).reshape(len(self.upsets), self.n_points)

    def nonconstant(self):
        """The family without the empty set and the whole cube."""
        full = (1 << self.n_points) - 1
        return UpSetFamily(self.ground_size,
                           tuple(u for u in self.upsets if u not in (0, full)))

    def points(self, upset):
        return [x for x in range(self.n_points) if upset >> x & 1]


@lru_cache(maxsize=None)
def _upset_masks(k):
    if k == 0:
        return (0, 1)
    half = 1 << (k - 1)
    lower = _upset_masks(k - 1)
    # U = g0 on {x_k = 0} and g1 on {x_k = 1}; closed upward iff g0 is inside g1
    return tuple(g0 | (g1 << half) for g1 in lower for g0 in lower if g0 & ~g1 == 0)


def enumerate_upsets(ground_size: int) -> UpSetFamily:
    """Every up-set of {0,1}^ground_size (Dedekind-number many)."""
    if ground_size < 0:
        raise ValueError("ground_size must be nonnegative")
    if ground_size > MAX_GROUND:
        raise ValueError(f"up-set enumeration capped at {MAX_GROUND}")
    return UpSetFamily(ground_size, tuple(sorted(_upset_masks(ground_size))))


def is_upset(mask: int, ground_size: int) -> bool:
    n_points = 1 << ground_size
    for x in range(n_points):
        if mask >> x & 1:
            for j in range(ground_size):
                if not mask >> (x | (1 << j)) & 1:
                    return False
    return True
