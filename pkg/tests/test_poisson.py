import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from orientperc.exact import enumerate_joint, marginal
from orientperc.graph import VertexSet, binary_tree_graph, tree_leaves
from orientperc.poisson import (PoissonError, diagnose_histogram, empirical_tv_poisson,
                                matched_height, poisson_diagnostics, stein_chen_bound,
                                stein_chen_raw, sum_pi_squared, synthetic_poisson_histogram,
                                tv_standard_error, variance_standard_error)
from orientperc.tree import TreeParams


def test_stein_chen_arithmetic():
    assert stein_chen_bound(1, 1, 0.01) == pytest.approx(0.02)
    assert stein_chen_bound(4, 4, 0) == 0
    assert stein_chen_bound(4, 6, 0.5) == pytest.approx(0.25 * 3)
    assert stein_chen_raw(2, 1, 0) == -0.5
    assert stein_chen_bound(2, 1, 0) == 0


@pytest.mark.parametrize("lam", [0, -1])
def test_stein_chen_rejects_lambda(lam):
    with pytest.raises(PoissonError, match="lambda"):
        stein_chen_bound(lam, 1, 0)


def test_sum_pi_squared():
    assert sum_pi_squared(TreeParams(6, 1.0)) == 63
    assert sum_pi_squared(TreeParams(6, 0.0)) == 0
    n = 3
    g = binary_tree_graph(n, 0.5)
    dist = enumerate_joint(g, VertexSet.of(tree_leaves(n), g.vertex_count))
    ref = sum(float(marginal(dist, v)) ** 2 for v in range((1 << n) - 1))
    assert sum_pi_squared(TreeParams(n, 0.5)) == pytest.approx(ref, abs=1e-14)


def test_tv_of_exact_pmf_is_zero():
    lam, N = 4.0, 10 ** 15
    ks = np.arange(60)
    hist = {int(k): int(round(q * N)) for k, q in zip(ks, stats.poisson.pmf(ks, lam)) if q * N >= 0.5}
    assert empirical_tv_poisson(hist, sum(hist.values()), lam) < 1e-12


def test_tv_point_mass():
    assert empirical_tv_poisson({0: 10}, 10, 1.0) == pytest.approx(1 - math.exp(-1), abs=1e-12)


def test_tv_far_away_mass():
    assert empirical_tv_poisson({500: 3}, 3, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_tv_large_lambda_is_stable():
    hist = synthetic_poisson_histogram(2000.0, 20_000, 1)
    tv = empirical_tv_poisson(hist, 20_000, 2000.0)
    assert 0 <= tv < 0.2


@given(st.dictionaries(st.integers(0, 40), st.integers(1, 50), min_size=1),
       st.floats(0.1, 30))
def test_tv_in_unit_interval(hist, lam):
    tv = empirical_tv_poisson(hist, sum(hist.values()), lam)
    assert 0 <= tv <= 1


def test_synthetic_within_noise():
    lam, N = 4.1, 100_000
    hist = synthetic_poisson_histogram(lam, N, 3)
    assert sum(hist.values()) == N
    assert empirical_tv_poisson(hist, N, lam) <= 2 * math.sqrt(lam / N)
    assert synthetic_poisson_histogram(lam, 100, 3) == synthetic_poisson_histogram(lam, 100, 3)


def test_standard_errors():
    hist = synthetic_poisson_histogram(4.0, 50_000, 5)
    # variance of a Poisson sample variance: (m4 - m2^2)/N = (lam + 2 lam^2)/N
    assert variance_standard_error(hist, 50_000) == pytest.approx(math.sqrt(36 / 50_000), rel=0.1)
    se = tv_standard_error(hist, 50_000, 4.0)
    assert 0 < se < 0.01


def test_diagnose_records_clamping():
    hist = {4: 10}
    d = diagnose_histogram(hist, 10, 4.0, 0.0, 0.0, "given")
    assert d.clamped and d.stein_chen_bound == 0
    js = d.to_json()
    for key in ("lambda", "variance", "variance_source", "sum_p_squared",
                "stein_chen_bound", "empirical_tv", "samples"):
        assert key in js


def test_tree_diagnostics():
    d = poisson_diagnostics(TreeParams(12, 0.001), 100_000, 0)
    assert d.lam == pytest.approx(2 ** 12 * 0.001, rel=0.02)
    assert d.variance_source == "monte-carlo"
    assert 0 <= d.stein_chen_bound < 10 * 0.001 + 3 * d.bound_se
    assert d.empirical_tv <= d.stein_chen_bound + 3 * math.hypot(d.tv_se, d.bound_se)
    assert d.to_json()["seed"] == 0


def test_zero_lambda():
    with pytest.raises(PoissonError, match="lambda"):
        poisson_diagnostics(TreeParams(5, 0.0), 10)


def test_matched_height():
    assert [matched_height(p) for p in (0.01, 0.005, 0.002, 0.001)] == [9, 10, 11, 12]
