import numpy as np
import pytest

from orientperc import _pykernels
from orientperc.exact import enumerate_joint, wet_masks
from orientperc.graph import (Orientation, VertexSet, binary_tree_graph, corpus, path_graph,
                              reachable_from, triangle, tree_leaves)
from orientperc.montecarlo import (CHUNK, MCSummary, SimulationError, covariance_standard_error,
                                   estimate_covariance, graph_wet_masks, histogram_csv_rows,
                                   indicator_matrix, run_graph_experiment,
                                   run_tree_experiment, sample_tree_indicators,
                                   simulate_graph_once, simulate_tree_once)
from orientperc.exact import marginal, pair_covariance
from orientperc.rng import SplitMixStream, stream_keys
from orientperc.tree import TreeParams, analyze, pi, rho_sequence


def _up_array(n, m):
    """Orientation index m of binary_tree_graph(n) as a heap-indexed up array."""
    size = 1 << (n + 1)
    up = np.zeros(size, np.uint8)
    for c in range(2, size):
        up[c] = m >> (c - 2) & 1
    return up


@pytest.mark.parametrize("n", [1, 2, 3])
def test_model_equivalence_all_orientations(n, backend):
    g = binary_tree_graph(n)
    src = VertexSet.of(tree_leaves(n), g.vertex_count)
    E = g.edge_count
    masks = wet_masks(g, src).tolist()
    step = 1 if n < 3 else 7  # reachable_from on a stride of T_3, bitmask kernel on all
    for m in range(1 << E):
        up = _up_array(n, m)
        X, Y = backend.tree_two_pass(n, up)
        Xs, Ys = backend.tree_wet_sparse(n, np.flatnonzero(up).astype(np.int64))
        assert np.array_equal(X, Xs) and np.array_equal(Y, Ys)
        heap_mask = sum(1 << (h - 1) for h in np.flatnonzero(X))
        assert heap_mask == masks[m]
        assert X[1] == Y[1]
        assert np.all(Y <= X)
        if m % step == 0:
            o = Orientation.from_mask(m, E)
            assert reachable_from(g, o, src).mask == heap_mask


@pytest.mark.parametrize("n,p", [(3, 0.5), (6, 0.3), (5, 0.9), (4, 0.0), (4, 1.0)])
@pytest.mark.parametrize("dense", [False, True])
def test_backends_agree(compiled, n, p, dense):
    keys = stream_keys(17, 0, 300)
    watch = np.array([1, 2, 3, (1 << n) - 1], np.int64)
    a = _pykernels.tree_simulate(n, p, dense, keys, watch)
    b = compiled.tree_simulate(n, p, dense, keys, watch)
    for x, y in zip(a, b):
        assert np.array_equal(np.asarray(x), np.asarray(y))


def test_reach_kernels_agree(compiled):
    g = binary_tree_graph(3)
    eu, ev = g.endpoints()
    src = VertexSet.of(tree_leaves(3), 15).mask
    a = _pykernels.enumerate_reach(15, eu, ev, src, 0, 1 << 14)
    b = compiled.enumerate_reach(15, eu, ev, src, 0, 1 << 14)
    assert np.array_equal(np.asarray(a), np.asarray(b))


def test_dense_and_sparse_same_law():
    params = TreeParams(5, 0.4)
    a = run_tree_experiment(params, 40_000, 1, method="sparse")
    b = run_tree_experiment(params, 40_000, 2, method="dense")
    se = np.sqrt(a.var_cluster / 40_000 + b.var_cluster / 40_000)
    assert abs(a.mean_cluster - b.mean_cluster) < 4 * se


def test_deterministic_across_threads():
    params = TreeParams(6, 0.45)
    samples = 2 * CHUNK + 123
    ref = run_tree_experiment(params, samples, 99, threads=1).to_json()
    for t in (2, 4, 8):
        assert run_tree_experiment(params, samples, 99, threads=t).to_json() == ref
    assert run_tree_experiment(params, samples, 100).to_json() != ref


def test_replicas_are_streams():
    params = TreeParams(4, 0.5)
    summary = run_tree_experiment(params, 50, 5)
    sizes = [simulate_tree_once(params, SplitMixStream(5, r)).cluster_size for r in range(50)]
    vals, counts = np.unique(sizes, return_counts=True)
    assert summary.histogram == dict(zip(vals.tolist(), counts.tolist()))


def test_simulate_once_advances_stream():
    params = TreeParams(3, 0.5)
    s = SplitMixStream(2)
    simulate_tree_once(params, s)
    assert s.counter == 15  # 14 edges, plus the sparse sampler's final overshooting skip
    run = simulate_tree_once(params, s)
    assert run.downwards_size <= run.cluster_size


def test_merge_is_associative():
    params = TreeParams(5, 0.5)
    parts = [run_tree_experiment(params, 500, s) for s in (1, 2, 3)]
    left = parts[0].merge(parts[1]).merge(parts[2])
    right = parts[0].merge(parts[1].merge(parts[2]))
    assert left.histogram == right.histogram
    assert left.var_cluster == right.var_cluster
    assert left.samples == 1500
    with pytest.raises(SimulationError):
        parts[0].merge(run_tree_experiment(TreeParams(4, 0.5), 10))


@pytest.mark.parametrize("method", ["sparse", "dense"])
def test_degenerate_biases(method):
    n = 5
    zero = run_tree_experiment(TreeParams(n, 0.0), 100, method=method)
    assert zero.histogram == {0: 100} and zero.root_wet_count == 0
    assert zero.max_level_counts == {0: 100}
    one = run_tree_experiment(TreeParams(n, 1.0), 100, method=method)
    assert one.histogram == {31: 100} and one.downwards_histogram == {31: 100}
    assert one.max_level_counts == {n: 100}
    assert one.var_cluster == 0


def test_mean_matches_analytics():
    params = TreeParams(7, 0.3)
    s = run_tree_experiment(params, 50_000, 3)
    a = analyze(params)
    se = np.sqrt(s.var_cluster / s.samples)
    assert abs(s.mean_cluster - a.expected_cluster) < 4 * se
    se = np.sqrt(s.var_downwards / s.samples)
    assert abs(s.mean_downwards - a.expected_downwards) < 4 * se
    r = rho_sequence(params)[7]
    assert abs(s.root_wet_frequency - r) < 4 * np.sqrt(r * (1 - r) / s.samples)


def test_tree_errors():
    with pytest.raises(SimulationError, match="memory cap"):
        run_tree_experiment(TreeParams(27, 0.1), 1)
    with pytest.raises(SimulationError):
        run_tree_experiment(TreeParams(3, 0.1), 0)
    with pytest.raises(SimulationError, match="method"):
        run_tree_experiment(TreeParams(3, 0.1), 1, method="bogus")


def test_histogram_csv_buckets():
    rows = histogram_csv_rows({3: 1, 70000: 2, 100000: 1, 1 << 17: 4})
    assert rows == [(3, 1), (65536, 3), (1 << 17, 4)]


def test_forced_graph_run():
    g = path_graph(3, 1.0)
    s = VertexSet.of([0], 3)
    assert simulate_graph_once(g, s, SplitMixStream(1)).to_list() == [0, 1, 2]


def test_graph_masks_are_streams():
    g = corpus(0.3)["K4"]
    s = VertexSet.of([0], 4)
    masks = graph_wet_masks(g, s, 300, 12, threads=3)
    assert masks == [simulate_graph_once(g, s, SplitMixStream(12, r)).mask for r in range(300)]


def test_triangle_joint_frequency():
    g = triangle()
    runs = graph_wet_masks(g, VertexSet.of([0], 3), 100_000, 4)
    both = np.mean([(m & 6) == 6 for m in runs])
    assert abs(both - 0.5) < 3 * np.sqrt(0.25 / 100_000)


@pytest.mark.parametrize("name", sorted(corpus()))
def test_graph_frequencies_match_oracle(name):
    g = corpus(0.4)[name]
    src = VertexSet.of([0], g.vertex_count)
    dist = enumerate_joint(g, src)
    s = run_graph_experiment(g, src, 20_000, 8)
    for i, f in enumerate(s.frequencies):
        m = marginal(dist, i)
        assert abs(f - m) <= 3 * np.sqrt(m * (1 - m) / s.samples) + 1e-12


def test_covariance_helpers():
    g = triangle()
    runs = graph_wet_masks(g, VertexSet.of([0], 3), 50_000, 1)
    v = estimate_covariance(runs, 1, 1)
    assert 0 <= v <= 0.25 + 1e-3
    c = estimate_covariance(runs, 1, 2)
    assert abs(c - 7 / 64) < 4 * covariance_standard_error(runs, 1, 2)
    assert indicator_matrix(runs[:2], [0]).shape == (2, 1)
    with pytest.raises(SimulationError):
        estimate_covariance(runs[:1], 1, 2)


def _level(n, h):
    return n - (h.bit_length() - 1)


def test_comparable_covariance_bound_exact():
    # Cov(X_u, X_v) <= pi_{level(v)} for u below v, on T_3 by enumeration
    n = 3
    g = binary_tree_graph(n, 0.5)
    dist = enumerate_joint(g, VertexSet.of(tree_leaves(n), g.vertex_count))
    params = TreeParams(n, 0.5)
    for u in range(2, 1 << (n + 1)):
        v = u >> 1
        while v >= 1:
            if _level(n, u) >= 1:
                assert pair_covariance(dist, u - 1, v - 1) <= pi(params, _level(n, v))
            v >>= 1


def test_incomparable_covariance_bound():
    n, p = 12, 0.01
    u, v = 1 << 11, (1 << 11) + 2  # level 1, joined at level 3, distance 4
    assert _level(n, u) == _level(n, v) == 1 and u >> 2 == v >> 2 and u >> 1 != v >> 1
    x = sample_tree_indicators(TreeParams(n, p), [u, v], 100_000, 21)
    c = estimate_covariance(x, 0, 1)
    bound = 4 * rho_sequence(TreeParams(n, p))[3]
    assert c <= bound + 3 * covariance_standard_error(x, 0, 1)


def test_indicators_deterministic():
    params = TreeParams(5, 0.4)
    a = sample_tree_indicators(params, [1, 2, 40], 5000, 3, threads=1)
    b = sample_tree_indicators(params, [1, 2, 40], 5000, 3, threads=4)
    assert np.array_equal(a, b) and a[:, 2].all()
    with pytest.raises(SimulationError):
        sample_tree_indicators(params, [64], 10)


def test_pure_fallback_selected_by_env():
    import json
    import os
    import subprocess
    import sys
    code = ("import json, orientperc; from orientperc.montecarlo import run_tree_experiment;"
            "from orientperc.tree import TreeParams;"
            "print(json.dumps([orientperc.BACKEND,"
            " run_tree_experiment(TreeParams(6, 0.3), 2000, 4).histogram]))")
    env = dict(os.environ, ORIENTPERC_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout
    name, hist = json.loads(out)
    assert name == "python"
    ref = run_tree_experiment(TreeParams(6, 0.3), 2000, 4).histogram
    assert {int(k): v for k, v in hist.items()} == ref
