"""Poisson approximation of the cluster size on T_n.

The Stein-Chen bound for positively related indicators, and the empirical
total-variation distance between a simulated size histogram and
Poisson(lambda).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .montecarlo import run_tree_experiment
from .tree import TreeParams, analyze

TAIL_EPS = 1e-12


class PoissonError(ValueError):
    pass


def stein_chen_raw(lam, variance, sum_p_squared):
    """min(1, 1/lam) * (variance - lam + 2 * sum_p_squared), unclamped."""
    if not lam > 0:
        raise PoissonError("lambda <= 0")
    if variance < 0:
        raise PoissonError("variance must be nonnegative")
    return min(1.0, 1.0 / lam) * (variance - lam + 2.0 * sum_p_squared)


def stein_chen_bound(lam, variance, sum_p_squared):
    """Upper bound on d_TV(W, Poisson(lam)), clamped below at 0.

    A negative raw value only comes from estimation error in ``variance``.
    """
    return max(0.0, stein_chen_raw(lam, variance, sum_p_squared))


def sum_pi_squared(params: TreeParams, analytics=None):
    """sum over non-leaf vertices of P(wet)**2 = sum_k 2**(n-k) pi_k**2."""
    a = analytics or analyze(params)
    n = params.height
    return math.fsum(math.ldexp(float(a.pi[k]) ** 2, n - k) for k in range(1, n + 1))


def _support(histogram, lam):
    top = max(histogram) if histogram else 0
    k_tail = int(stats.poisson.isf(TAIL_EPS, lam)) + 1
    while stats.poisson.sf(k_tail, lam) >= TAIL_EPS:
        k_tail += 1
    return np.arange(max(top, k_tail) + 1)


def _empirical(histogram, samples, ks):
    h = np.zeros(len(ks))
    for k, c in histogram.items():
        h[int(k)] += c
    return h / samples


def empirical_tv_poisson(histogram, samples, lam):
    """Half the L1 distance between the empirical law and Poisson(lam).

    The support runs far enough that the Poisson tail beyond it is below
    1e-12; that tail is added as is.
    """
    if samples < 1:
        raise PoissonError("samples must be >= 1")
    if not lam > 0:
        raise PoissonError("lambda <= 0")
    ks = _support(histogram, lam)
    h = _empirical(histogram, samples, ks)
    q = np.exp(stats.poisson.logpmf(ks, lam))
    tail = float(stats.poisson.sf(ks[-1], lam))
    return float(min(1.0, 0.5 * math.fsum(np.abs(h - q)) + 0.5 * tail))


def tv_standard_error(histogram, samples, lam):
    """Delta-method standard error of :func:`empirical_tv_poisson`."""
    ks = _support(histogram, lam)
    h = _empirical(histogram, samples, ks)
    q = np.exp(stats.poisson.logpmf(ks, lam))
    g = 0.5 * np.sign(h - q)
    var = (np.dot(g * g, h) - np.dot(g, h) ** 2) / samples
    return float(math.sqrt(max(var, 0.0)))


def variance_standard_error(histogram, samples):
    """Standard error of the sample variance, sqrt((m4 - m2**2) / N)."""
    ks = np.array(list(histogram.keys()), dtype=float)
    cs = np.array(list(histogram.values()), dtype=float)
    mean = np.dot(ks, cs) / samples
    d = ks - mean
    m2 = np.dot(d ** 2, cs) / samples
    m4 = np.dot(d ** 4, cs) / samples
    return float(math.sqrt(max(m4 - m2 * m2, 0.0) / samples))


def synthetic_poisson_histogram(lam, samples, seed=0):
    """Histogram of ``samples`` exact Poisson(lam) draws (calibration aid)."""
    draws = np.random.default_rng(seed).poisson(lam, size=samples)
    keys, counts = np.unique(draws, return_counts=True)
    return dict(zip(keys.tolist(), counts.tolist()))


@dataclass
class PoissonDiagnostics:
    lam: float
    variance: float
    variance_source: str
    sum_p_squared: float
    stein_chen_bound: float
    empirical_tv: float
    samples: int
    clamped: bool = False
    tv_se: float = 0.0
    variance_se: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def bound_se(self):
        """Standard error carried into the bound by the variance estimate."""
        return min(1.0, 1.0 / self.lam) * self.variance_se

    def to_json(self):
        out = dict(self.meta)
        out.update({
            "lambda": self.lam,
            "variance": self.variance,
            "variance_source": self.variance_source,
            "sum_p_squared": self.sum_p_squared,
            "stein_chen_bound": self.stein_chen_bound,
            "stein_chen_clamped": self.clamped,
            "empirical_tv": self.empirical_tv,
            "empirical_tv_se": self.tv_se,
            "variance_se": self.variance_se,
            "samples": self.samples,
        })
        return out


def diagnose_histogram(histogram, samples, lam, sum_p_squared, variance, variance_source):
    raw = stein_chen_raw(lam, variance, sum_p_squared)
    return PoissonDiagnostics(
        lam=lam,
        variance=variance,
        variance_source=variance_source,
        sum_p_squared=sum_p_squared,
        stein_chen_bound=max(0.0, raw),
        empirical_tv=empirical_tv_poisson(histogram, samples, lam),
        samples=samples,
        clamped=raw < 0,
        tv_se=tv_standard_error(histogram, samples, lam),
        variance_se=variance_standard_error(histogram, samples),
    )


def poisson_diagnostics(params: TreeParams, samples: int, seed: int = 0, threads: int = 1,
                        method="sparse"):
    """lambda and sum pi**2 from the closed forms; variance and histogram from
    a seeded simulation."""
    a = analyze(params)
    lam = float(a.expected_cluster)
    if not lam > 0:
        raise PoissonError("lambda <= 0")
    summary = run_tree_experiment(params, samples, seed, threads, method)
    diag = diagnose_histogram(summary.histogram, samples, lam, sum_pi_squared(params, a),
                              summary.var_cluster, "monte-carlo")
    diag.meta = summary.metadata()
    return diag


def matched_height(p, target_lambda=4.0):
    """Tree height whose 2**n p is closest (in log scale) to ``target_lambda``."""
    return max(1, round(math.log2(target_lambda / p)))


def tv_scaling_grid(ps, samples, seed=0, target_lambda=4.0, threads=1):
    """Diagnostics along a grid of p at roughly constant lambda."""
    return [(p, matched_height(p, target_lambda),
             poisson_diagnostics(TreeParams(matched_height(p, target_lambda), p),
                                 samples, seed, threads))
            for p in ps]
