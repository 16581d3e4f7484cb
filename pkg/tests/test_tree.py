import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from orientperc.exact import enumerate_joint, marginal
from orientperc.graph import VertexSet, binary_tree_graph, tree_leaves
from orientperc.tree import (TreeParamError, TreeParams, alpha, alpha_by_entry_level,
                             analyze, expected_cluster, expected_downwards, fixed_point,
                             kappa, max_level_cdf, max_level_pmf,
                             max_level_window_probability, nint, pi, predicted_max_levels,
                             rho_bounds, rho_sequence)

half = Fraction(1, 2)


def test_rho_exact_values():
    assert rho_sequence(TreeParams(2, half)) == [1, Fraction(3, 4), Fraction(39, 64)]
    assert expected_downwards(TreeParams(2, half)) == Fraction(135, 64)


def test_degenerate_biases():
    a = analyze(TreeParams(4, 0.0))
    assert a.rho == [1.0, 0, 0, 0, 0]
    assert a.pi[1:] == [0, 0, 0, 0] and a.expected_cluster == 0
    b = analyze(TreeParams(4, 1.0))
    assert all(x == 1 for x in b.rho + b.pi)
    assert b.expected_cluster == 15


@pytest.mark.parametrize("p", [0.6, 0.75, 0.9, 1.0])
def test_supercritical_limit(p):
    rho = rho_sequence(TreeParams(300, p))
    assert rho[-1] == pytest.approx(fixed_point(p), abs=1e-12)
    assert all(a >= b for a, b in zip(rho, rho[1:]))


def test_fixed_point():
    assert fixed_point(0.3) == 0
    assert fixed_point(Fraction(3, 4)) == Fraction(8, 9)
    with pytest.raises(TreeParamError):
        fixed_point(1.5)


@given(st.floats(0.0, 1.0), st.integers(1, 12))
def test_alpha_two_forms_agree(p, n):
    params = TreeParams(n, p)
    for k in range(n + 1):
        assert alpha(params, k) == pytest.approx(alpha_by_entry_level(params, k), abs=1e-14)


def test_alpha_exact_forms_agree():
    params = TreeParams(5, Fraction(2, 5))
    for k in range(6):
        assert alpha(params, k) == alpha_by_entry_level(params, k)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("p", [Fraction(1, 4), half])
def test_pi_matches_exact_oracle(n, p):
    g = binary_tree_graph(n, float(p))
    dist = enumerate_joint(g, VertexSet.of(tree_leaves(n), g.vertex_count))
    params = TreeParams(n, p)
    for v in range((1 << n) - 1):
        level = n - ((v + 1).bit_length() - 1)
        assert marginal(dist, v) == pi(params, level)
    assert expected_cluster(params) == sum(marginal(dist, v) for v in range((1 << n) - 1))


def test_expected_sizes_order():
    for p in (0.1, 0.4, 0.7):
        a = analyze(TreeParams(10, p))
        assert 0 <= a.expected_downwards <= a.expected_cluster <= 2 ** 10 - 1


def test_rows():
    rows = analyze(TreeParams(2, 0.5)).rows()
    assert [r[0] for r in rows] == [0, 1, 2]
    assert rows[1][1] == 0.75 and rows[2][1] == 0.609375
    assert rows[1][4] == 2 * rows[1][3]


@pytest.mark.parametrize("p", [0.05, 0.2, 0.4])
def test_rho_bounds(p):
    params = TreeParams(40, p)
    rho = rho_sequence(params)
    for k in range(41):
        lo, hi = rho_bounds(params, k)
        assert lo * (1 - 1e-12) <= rho[k] <= hi * (1 + 1e-12)


def test_rho_bounds_domain():
    with pytest.raises(TreeParamError, match="p < 1/2"):
        rho_bounds(TreeParams(3, 0.5), 1)


def test_max_level_distribution():
    params = TreeParams(20, 0.05)
    pmf = max_level_pmf(params)
    assert math.fsum(pmf) == pytest.approx(1, abs=1e-12)
    assert min(pmf) >= -1e-15
    cdf = [max_level_cdf(params, k) for k in range(1, 21)]
    assert cdf == sorted(cdf)
    assert kappa(params) == pytest.approx(4.6276, abs=1e-4)
    assert predicted_max_levels(params) == (4, 5)
    assert max_level_window_probability(params, (4, 5)) >= 0.95
    with pytest.raises(TreeParamError):
        max_level_cdf(params, 0)


def test_max_level_cdf_by_brute_force():
    # T_2 at p = 1/2: max level < 2 iff the root is not Y-wet
    params = TreeParams(2, 0.5)
    assert max_level_cdf(params, 2) == pytest.approx(1 - 39 / 64)
    assert max_level_cdf(params, 1) == pytest.approx((1 - 0.75) ** 2)


def test_kappa_domain_and_nint():
    with pytest.raises(TreeParamError):
        kappa(TreeParams(5, 0.0))
    assert nint(2.5) == 3 and nint(2.49) == 2


def test_params_validation():
    with pytest.raises(TreeParamError):
        TreeParams(-1, 0.5)
    with pytest.raises(TreeParamError):
        TreeParams(3, 1.2)


def test_large_height_no_overflow():
    a = analyze(TreeParams(600, 0.3))
    assert math.isfinite(a.expected_cluster) and a.expected_cluster > 0
