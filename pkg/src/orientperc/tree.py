"""Closed forms for percolation from the leaves of the complete binary tree T_n.

Levels run from 0 (leaves) to n (root).  Every edge points towards the root
with probability ``p``.  Functions accept ``p`` as a float or a
``fractions.Fraction``; the recurrence-based quantities are then exact.
"""

import math
from dataclasses import dataclass
from fractions import Fraction


class TreeParamError(ValueError):
    pass


@dataclass(frozen=True)
class TreeParams:
    height: int
    bias: float

    def __post_init__(self):
        if not isinstance(self.height, int) or self.height < 0:
            raise TreeParamError(f"height must be a nonnegative integer, got {self.height!r}")
        if not 0 <= self.bias <= 1:
            raise TreeParamError(f"bias must lie in [0, 1], got {self.bias!r}")

    @property
    def n(self):
        return self.height

    @property
    def p(self):
        return self.bias


@dataclass(frozen=True)
class TreeAnalytics:
    params: TreeParams
    rho: list
    alpha: list
    pi: list
    expected_downwards: float
    expected_cluster: float

    def rows(self):
        """``(k, rho_k, alpha_k, pi_k, 2**(n-k) * pi_k)`` for ``k = 0..n``."""
        n = self.params.height
        return [(k, self.rho[k], self.alpha[k], self.pi[k], _scale(self.pi[k], n - k))
                for k in range(n + 1)]


def _sum(values):
    values = list(values)
    if any(isinstance(v, Fraction) for v in values):
        return sum(values, Fraction(0))
    return math.fsum(values)


def _scale(x, e):
    """x * 2**e without forming 2**e (no overflow for large n)."""
    if isinstance(x, Fraction):
        return x * (1 << e)
    return math.ldexp(x, e)


def rho_sequence(params: TreeParams) -> list:
    """[rho_0, ..., rho_n] from rho_{k+1} = 2 p rho_k - (p rho_k)**2, rho_0 = 1."""
    p = params.bias
    rho = [Fraction(1) if isinstance(p, Fraction) else 1.0]
    for _ in range(params.height):
        x = p * rho[-1]
        rho.append(2 * x - x * x)
    return rho


def fixed_point(p) -> float:
    """Limit of rho_n: 0 for p <= 1/2, else (2p - 1) / p**2."""
    if not 0 <= p <= 1:
        raise TreeParamError(f"bias must lie in [0, 1], got {p!r}")
    if p <= Fraction(1, 2):
        return 0 * p
    return (2 * p - 1) / (p * p)


def _check_level(params, k, lowest=0):
    if not lowest <= k <= params.height:
        raise TreeParamError(f"level {k} outside {lowest}..{params.height}")


def alpha(params: TreeParams, k: int, rho=None):
    """Probability that water reaches a level-k vertex from below.

    Sum over the entry level k+1+i of the path to the root, with a running
    product for the "nothing entered lower" factor.
    """
    _check_level(params, k)
    p, n = params.bias, params.height
    if rho is None:
        rho = rho_sequence(params)
    q = 1 - p
    terms = []
    geo = 1  # (1 - p)**i
    prod = 1  # prod_{j < i} (1 - p rho_{k+j})
    for i in range(n - k):
        terms.append(geo * rho[k + i] * prod)
        geo *= q
        prod *= 1 - p * rho[k + i]
    return q * p * _sum(terms)


def alpha_by_entry_level(params: TreeParams, k: int, rho=None):
    """``alpha`` as the sum of P(M = k + i), i = 1..n-k.

    M is the smallest level above k at which water enters the path to the
    root from a side subtree and then runs down to the vertex.  Each term is
    computed from scratch, independently of the running products in
    :func:`alpha`.
    """
    _check_level(params, k)
    p, n = params.bias, params.height
    if rho is None:
        rho = rho_sequence(params)
    terms = []
    for i in range(1, n - k + 1):
        prod = 1
        for j in range(i - 1):
            prod *= 1 - p * rho[k + j]
        terms.append((1 - p) ** i * p * rho[k + i - 1] * prod)
    return _sum(terms)


def pi(params: TreeParams, k: int, rho=None):
    """P(a level-k vertex of T_n is wet) = rho_k + (1 - rho_k) alpha_k."""
    _check_level(params, k)
    if rho is None:
        rho = rho_sequence(params)
    return rho[k] + (1 - rho[k]) * alpha(params, k, rho)


def expected_downwards(params: TreeParams, rho=None):
    """E|C_n^down| = sum_{k=1}^n 2**(n-k) rho_k (0 for n = 0)."""
    n = params.height
    if rho is None:
        rho = rho_sequence(params)
    return _sum(_scale(rho[k], n - k) for k in range(1, n + 1))


def expected_cluster(params: TreeParams, rho=None):
    """E|C_n| = sum_{k=1}^n 2**(n-k) pi_k (0 for n = 0)."""
    n = params.height
    if rho is None:
        rho = rho_sequence(params)
    return _sum(_scale(pi(params, k, rho), n - k) for k in range(1, n + 1))


def analyze(params: TreeParams) -> TreeAnalytics:
    rho = rho_sequence(params)
    n = params.height
    al = [alpha(params, k, rho) for k in range(n + 1)]
    pis = [rho[k] + (1 - rho[k]) * al[k] for k in range(n + 1)]
    down = _sum(_scale(rho[k], n - k) for k in range(1, n + 1))
    clus = _sum(_scale(pis[k], n - k) for k in range(1, n + 1))
    return TreeAnalytics(params, rho, al, pis, down, clus)


def rho_bounds(params: TreeParams, k: int):
    """``(exp(-2p/(1-2p)**2) (2p)**k, (2p)**k)``, valid for p < 1/2."""
    p = float(params.bias)
    if p >= 0.5:
        raise TreeParamError("bounds valid only for p < 1/2")
    _check_level(params, k)
    upper = (2 * p) ** k
    return math.exp(-2 * p / (1 - 2 * p) ** 2) * upper, upper


def max_level_cdf(params: TreeParams, k: int, rho=None) -> float:
    """P(max level reached < k) = (1 - rho_k) ** (2 ** (n - k)), 1 <= k <= n.

    The level-k subtrees are disjoint, so their downward events are independent.
    """
    _check_level(params, k, lowest=1)
    if rho is None:
        rho = rho_sequence(params)
    r = float(rho[k])
    if r >= 1.0:
        return 0.0
    return math.exp(math.ldexp(math.log1p(-r), params.height - k))


def max_level_pmf(params: TreeParams, rho=None):
    """P(max level = j) for j = 0..n, from :func:`max_level_cdf`."""
    n = params.height
    if rho is None:
        rho = rho_sequence(params)
    cdf = [max_level_cdf(params, k, rho) for k in range(1, n + 1)] + [1.0]
    return [cdf[0]] + [cdf[j] - cdf[j - 1] for j in range(1, n + 1)]


def kappa(params: TreeParams) -> float:
    """log(2) n / log(1/p); the max level concentrates on {nint-1, nint}."""
    p = float(params.bias)
    if p <= 0.0 or p >= 1.0:
        raise TreeParamError("kappa needs 0 < p < 1")
    return math.log(2) * params.height / math.log(1 / p)


def nint(x) -> int:
    """Nearest integer, halves rounded up."""
    return math.floor(x + 0.5)


def predicted_max_levels(params: TreeParams):
    m = nint(kappa(params))
    return m - 1, m


def max_level_window_probability(params: TreeParams, levels, rho=None) -> float:
    """P(max level in ``levels``) for a contiguous range of levels."""
    lo, hi = min(levels), max(levels)
    n = params.height
    if rho is None:
        rho = rho_sequence(params)

    def below(k):
        if k <= 0:
            return 0.0
        if k > n:
            return 1.0
        return max_level_cdf(params, k, rho)

    return below(hi + 1) - below(lo)
