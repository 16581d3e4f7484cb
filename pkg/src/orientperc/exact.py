"""Exact joint law of the wetness indicators by enumerating orientations.

Orientation ``m`` (an integer in ``0 .. 2**|E| - 1``) orients edge ``e``
as ``u -> v`` when bit ``e`` of ``m`` is set.  Enumeration order is plain binary
counting; the work splits into disjoint index ranges whose wet-mask arrays
are concatenated before a single reduction, so the result does not depend on
how many workers computed it.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Optional

import numpy as np

from ._backend import kernels
from .graph import Graph, VertexSet
from .upsets import MAX_GROUND, enumerate_upsets

DEFAULT_EDGE_CAP = 24
EXACT_EDGE_CAP = 16
EXACT_MAX_DENOM_BITS = 16
TOLERANCE = 1e-12
_MAX_BITMASK_VERTICES = 64


class OracleError(ValueError):
    """Enumeration or check cannot be carried out as requested."""


@dataclass(frozen=True)
class JointDistribution:
    """Probability mass over wetness bitmasks (bit ``i`` set: vertex ``i`` wet)."""

    vertex_count: int
    source: VertexSet
    mass: dict
    exact: bool = False

    def total(self):
        if self.exact:
            return sum(self.mass.values(), Fraction(0))
        return math.fsum(self.mass.values())

    def to_json(self):
        def enc(v):
            return f"{v.numerator}/{v.denominator}" if self.exact else float(v)
        return {
            "vertex_count": self.vertex_count,
            "source": self.source.to_list(),
            "arithmetic": "rational" if self.exact else "double",
            "mass": {hex(w): enc(m) for w, m in sorted(self.mass.items())},
        }


@dataclass
class AssociationReport:
    passed: bool
    min_covariance: float
    witness: Optional[dict]
    checks_performed: int
    kind: str = "association"
    window: list = field(default_factory=list)
    min_covariance_exact: Optional[Fraction] = None
    skipped: list = field(default_factory=list)

    def to_json(self):
        out = {
            "kind": self.kind,
            "passed": self.passed,
            "min_covariance": self.min_covariance,
            "witness": self.witness,
            "checks_performed": self.checks_performed,
            "window": self.window,
        }
        if self.min_covariance_exact is not None:
            out["min_covariance_exact"] = _frac_str(self.min_covariance_exact)
        if self.skipped:
            out["skipped"] = self.skipped
        return out


def _frac_str(x):
    return f"{x.numerator}/{x.denominator}"


def _is_exact_eligible(graph):
    if graph.edge_count > EXACT_EDGE_CAP:
        return False
    return all(b.denominator <= (1 << EXACT_MAX_DENOM_BITS) for b in graph.exact_biases())


def wet_masks(graph, sources, lo=0, hi=None, workers=1, chunk=1 << 16):
    """Wet bitmask of every orientation index in ``[lo, hi)``."""
    if hi is None:
        hi = 1 << graph.edge_count
    eu, ev = graph.endpoints()
    if workers <= 1 or hi - lo <= chunk:
        return kernels.enumerate_reach(graph.vertex_count, eu, ev, sources.mask, lo, hi)
    bounds = [(a, min(a + chunk, hi)) for a in range(lo, hi, chunk)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(
            lambda ab: kernels.enumerate_reach(graph.vertex_count, eu, ev,
                                               sources.mask, ab[0], ab[1]),
            bounds))
    return np.concatenate(parts)


def orientation_weights(graph, exact):
    """Probability of every orientation index, built by doubling over edges."""
    if exact:
        fr = graph.exact_biases()
        denom = max((b.denominator for b in fr), default=1)
        nums = [b.numerator * (denom // b.denominator) for b in fr]
        w = [1]
        for a in nums:
            w = [x * (denom - a) for x in w] + [x * a for x in w]
        return w, denom ** graph.edge_count
    w = np.ones(1)
    for b in graph.biases():
        w = np.concatenate([w * (1.0 - b), w * b])
    return w, 1


def enumerate_joint(graph: Graph, sources: VertexSet, *, cap=DEFAULT_EDGE_CAP,
                    exact=None, workers=1) -> JointDistribution:
    """Exact law of ``(1{S ~> i})_i`` over all ``2**|E|`` orientations.

    ``exact=None`` picks rational arithmetic when every bias is a dyadic
    rational with denominator at most ``2**16`` and ``|E| <= 16``.
    """
    if sources.mask == 0:
        raise OracleError("empty source")
    if graph.edge_count > cap:
        raise OracleError(f"graph has {graph.edge_count} edges; enumeration cap is {cap}")
    if graph.vertex_count > _MAX_BITMASK_VERTICES:
        raise OracleError(f"enumeration supports at most {_MAX_BITMASK_VERTICES} vertices")
    if exact is None:
        exact = _is_exact_eligible(graph)
    elif exact and graph.edge_count > EXACT_EDGE_CAP:
        raise OracleError(f"rational mode limited to {EXACT_EDGE_CAP} edges")
    masks = wet_masks(graph, sources, workers=workers)
    weights, denom = orientation_weights(graph, exact)
    if exact:
        acc = {}
        for m, w in zip(masks.tolist(), weights):
            if w:
                acc[m] = acc.get(m, 0) + w
        mass = {m: Fraction(w, denom) for m, w in acc.items()}
    else:
        keys, inverse = np.unique(masks, return_inverse=True)
        order = np.argsort(inverse, kind="stable")
        bounds = np.searchsorted(inverse[order], np.arange(1, len(keys)))
        groups = np.split(weights[order], bounds)
        mass = {int(k): math.fsum(g) for k, g in zip(keys, groups)}
        mass = {k: v for k, v in mass.items() if v > 0.0}
    return JointDistribution(graph.vertex_count, sources, mass, exact)


def merge_distributions(parts):
    """Sum unnormalised partial distributions over disjoint orientation ranges."""
    parts = list(parts)
    first = parts[0]
    acc = {}
    for d in parts:
        for k, v in d.mass.items():
            acc[k] = acc.get(k, 0) + v
    return JointDistribution(first.vertex_count, first.source, acc, first.exact)


def partial_joint(graph, sources, lo, hi, exact=None):
    """Unnormalised mass contributed by orientation indices ``[lo, hi)``."""
    if exact is None:
        exact = _is_exact_eligible(graph)
    masks = wet_masks(graph, sources, lo, hi)
    weights, denom = orientation_weights(graph, exact)
    acc = {}
    for m, w in zip(masks.tolist(), weights[lo:hi]):
        acc[m] = acc.get(m, 0) + w
    if exact:
        acc = {m: Fraction(w, denom) for m, w in acc.items() if w}
    return JointDistribution(graph.vertex_count, sources, acc, exact)


def _check_vertex(dist, i):
    if not 0 <= i < dist.vertex_count:
        raise OracleError(f"vertex {i} out of range")


def marginal(dist: JointDistribution, i: int):
    """P(vertex ``i`` is wet)."""
    _check_vertex(dist, i)
    vals = [m for w, m in dist.mass.items() if w >> i & 1]
    return sum(vals, Fraction(0)) if dist.exact else math.fsum(vals)


def joint(dist: JointDistribution, i: int, j: int):
    _check_vertex(dist, i)
    _check_vertex(dist, j)
    vals = [m for w, m in dist.mass.items() if w >> i & 1 and w >> j & 1]
    return sum(vals, Fraction(0)) if dist.exact else math.fsum(vals)


def pair_covariance(dist: JointDistribution, i: int, j: int):
    return joint(dist, i, j) - marginal(dist, i) * marginal(dist, j)


def marginals(dist):
    return [marginal(dist, i) for i in range(dist.vertex_count)]


def free_vertices(dist, tol=None):
    """Non-source vertices whose wetness is not almost surely constant."""
    if tol is None:
        tol = 0 if dist.exact else TOLERANCE
    out = []
    for i in range(dist.vertex_count):
        if i in dist.source:
            continue
        m = marginal(dist, i)
        if tol < m < 1 - tol:
            out.append(i)
    return VertexSet.of(out, dist.vertex_count)


def window_law(dist, window):
    """Law of the sub-vector indexed by ``window``: point bit ``j`` is ``window[j]``."""
    q = [Fraction(0) if dist.exact else 0.0 for _ in range(1 << len(window))]
    for w, m in dist.mass.items():
        x = 0
        for j, v in enumerate(window):
            if w >> v & 1:
                x |= 1 << j
        q[x] += m
    return q


@lru_cache(maxsize=None)
def _family(k):
    fam = enumerate_upsets(k).nonconstant()
    return fam, fam.indicator_matrix(dtype=np.float64)


def _point_list(x, window):
    return [v for j, v in enumerate(window) if x >> j & 1]


def _upset_points(fam, idx, window):
    return [_point_list(x, window) for x in fam.points(fam.upsets[idx])]


def _common_denominator(q):
    d = 1
    for v in q:
        d = d * v.denominator // math.gcd(d, v.denominator)
    return [int(v * d) for v in q], d


def _window(free, dist):
    window = sorted(free) if not isinstance(free, VertexSet) else free.to_list()
    if len(window) > MAX_GROUND:
        raise OracleError(
            f"window of {len(window)} vertices exceeds the up-set cap of {MAX_GROUND}")
    for v in window:
        _check_vertex(dist, v)
    return window


def check_positive_association(dist: JointDistribution, free, tol=TOLERANCE) -> AssociationReport:
    """Cov(1_U, 1_W) >= 0 for every pair of up-sets over the window coordinates.

    Constant up-sets (empty, whole cube) have zero covariance with everything
    and are left out of the minimum.  Exact distributions on windows of at
    most four vertices are checked in integer arithmetic with zero tolerance.
    """
    window = _window(free, dist)
    k = len(window)
    fam, M = _family(k)
    nU = len(fam)
    if nU == 0:
        return AssociationReport(True, 0.0, None, 0, window=window)
    q = window_law(dist, window)
    checks = nU * (nU + 1) // 2
    if dist.exact and k <= 4:
        qi, d = _common_denominator(q)
        Mi = M.astype(np.int64).astype(object)
        qv = np.array(qi, dtype=object)
        pu = Mi.dot(qv)
        puw = (Mi * qv).dot(Mi.T)
        scaled = puw * d - np.outer(pu, pu)
        iu = np.triu_indices(nU)
        flat = scaled[iu]
        pos = min(range(len(flat)), key=flat.__getitem__)
        a, b = int(iu[0][pos]), int(iu[1][pos])
        exact_min = Fraction(int(flat[pos]), d * d)
        passed = exact_min >= 0
        min_cov = float(exact_min)
    else:
        qf = np.array([float(v) for v in q])
        pu = M @ qf
        # one product gives P(U and W) - P(U) P(W): [M*q, -pU] . [M, pW]
        lhs = np.hstack([M * qf, -pu[:, None]])
        rhs = np.ascontiguousarray(np.hstack([M, pu[:, None]]).T)
        min_cov, a, b = math.inf, 0, 0
        step = 1024
        for s in range(0, nU, step):
            e = min(s + step, nU)
            # rows s..e against columns s..: the lower-left part of the square
            # duplicates upper entries by symmetry, so no masking is needed
            block = lhs[s:e] @ rhs[:, s:]
            idx = int(np.argmin(block))
            r, c = divmod(idx, block.shape[1])
            if block[r, c] < min_cov:
                min_cov, a, b = float(block[r, c]), s + r, s + c
        exact_min = None
        if dist.exact:
            pa = sum((q[x] for x in fam.points(fam.upsets[a])), Fraction(0))
            pb = sum((q[x] for x in fam.points(fam.upsets[b])), Fraction(0))
            pab = sum((q[x] for x in fam.points(fam.upsets[a] & fam.upsets[b])), Fraction(0))
            exact_min = pab - pa * pb
        passed = min_cov >= -tol
    witness = {"U": _upset_points(fam, a, window), "W": _upset_points(fam, b, window)}
    return AssociationReport(passed, min_cov, witness, checks, "association", window,
                             exact_min)


def check_positive_relation(dist: JointDistribution, free, tol=TOLERANCE) -> AssociationReport:
    """Law of X given X_i = 1 dominates the law of X, for each window vertex i.

    Domination is tested on every non-constant up-set U of the window:
    P(U | X_i = 1) - P(U) >= 0.  The reported minimum is that gap.
    """
    window = _window(free, dist)
    k = len(window)
    fam, M = _family(k)
    q = window_law(dist, window)
    skipped = []
    best = None  # (gap, vertex, upset index)
    checks = 0
    if dist.exact:
        qi, d = _common_denominator(q)
        Mi = M.astype(np.int64).astype(object)
        pu = Mi.dot(np.array(qi, dtype=object)) if len(fam) else []
        for j, v in enumerate(window):
            cond = [x if (idx >> j) & 1 else 0 for idx, x in enumerate(qi)]
            pi = sum(cond)
            if pi == 0:
                skipped.append(v)
                continue
            pcu = Mi.dot(np.array(cond, dtype=object))
            for u in range(len(fam)):
                gap = Fraction(int(pcu[u]), pi) - Fraction(int(pu[u]), d)
                checks += 1
                if best is None or gap < best[0]:
                    best = (gap, v, u)
    else:
        qf = np.array([float(x) for x in q])
        pu = M @ qf
        for j, v in enumerate(window):
            sel = np.array([(x >> j) & 1 for x in range(len(qf))], dtype=bool)
            pi = math.fsum(qf[sel])
            if pi <= 0.0:
                skipped.append(v)
                continue
            gaps = (M[:, sel] @ qf[sel]) / pi - pu
            checks += len(gaps)
            if len(gaps):
                u = int(np.argmin(gaps))
                if best is None or gaps[u] < best[0]:
                    best = (float(gaps[u]), v, u)
    if best is None:
        return AssociationReport(True, 0.0, None, checks, "relation", window, skipped=skipped)
    gap, v, u = best
    exact_gap = gap if dist.exact else None
    passed = gap >= 0 if dist.exact else gap >= -tol
    witness = {"vertex": v, "U": _upset_points(fam, u, window)}
    return AssociationReport(bool(passed), float(gap), witness, checks, "relation", window,
                             exact_gap, skipped)


def windows(free: VertexSet, size=MAX_GROUND):
    """All windows of ``min(size, |free|)`` free vertices."""
    members = free.to_list()
    k = min(size, len(members))
    return [list(c) for c in combinations(members, k)]


__all__ = [
    "AssociationReport",
    "JointDistribution",
    "OracleError",
    "check_positive_association",
    "check_positive_relation",
    "enumerate_joint",
    "free_vertices",
    "joint",
    "marginal",
    "marginals",
    "merge_distributions",
    "pair_covariance",
    "partial_joint",
    "window_law",
    "windows",
]
