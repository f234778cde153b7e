import numpy as np
import pytest

from scms.channel import ChannelSpec, all_zero_llr
from scms.code import DegreeDistribution, TannerGraph, sample_irregular
from scms.decoders import MS, SCMS, TRACE_FULL, DecoderConfig, decode
from scms.tree import (
    CHK,
    VAR,
    ComputationTree,
    dyadic,
    prune_erased,
    pruning_check,
    pruning_trials,
    random_tree,
    tree_decode,
    tree_run,
    unroll_tree,
)


def six_cycle() -> TannerGraph:
    # v0 - c0 - v1 - c1 - v2 - c2 - v0
    return TannerGraph.from_edges(3, 3, [(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (0, 2)])


def tree_graph() -> TannerGraph:
    # c0 joins v0,v1,v2; c1 joins v2,v3; c2 joins v1,v4,v5
    return TannerGraph.from_edges(6, 3, [(0, 0), (1, 0), (2, 0), (2, 1), (3, 1), (1, 2), (4, 2), (5, 2)])


def test_depth_zero_is_root():
    t = unroll_tree(six_cycle(), 1, depth=0)
    assert t.size == 1 and t.kind[0] == VAR and t.origin[0] == 1
    t = t.with_llr(np.array([0.5, -1.25, 3.0]))
    assert tree_decode(t, MS) == -1.25 and tree_decode(t, SCMS) == -1.25


def test_unrolled_tree_of_tree_graph_is_isomorphic():
    g = tree_graph()
    t = unroll_tree(g, 0, depth=5)
    vs, cs = t.kind == VAR, t.kind == CHK
    assert sorted(t.origin[vs].tolist()) == list(range(g.N))
    assert sorted(t.origin[cs].tolist()) == list(range(g.M))
    edges = set()
    for k in range(1, t.size):
        a, b = k, t.parent[k]
        n, m = (t.origin[a], t.origin[b]) if t.kind[a] == VAR else (t.origin[b], t.origin[a])
        edges.add((int(n), int(m)))
    assert edges == {(n, m) for n in range(g.N) for m in g.var_adj[n]}


def test_six_cycle_repeats_labels():
    t = unroll_tree(six_cycle(), 0, depth=2)
    labels = t.origin[t.kind == VAR].tolist()
    assert len(labels) > len(set(labels))


def test_unroll_excluding_parent():
    g = tree_graph()
    t = unroll_tree(g, 2, exclude=0, depth=3)
    assert 0 not in t.origin[(t.kind == CHK) & (t.parent == 0)].tolist()
    with pytest.raises(ValueError):
        unroll_tree(g, 2, exclude=2, depth=1)
    with pytest.raises(ValueError):
        unroll_tree(g, 2, depth=-1)


def test_tree_invariants():
    with pytest.raises(ValueError):
        ComputationTree(np.array([CHK]), np.array([-1]), np.array([0]), np.array([0]), np.zeros(1))
    # check node as a leaf
    with pytest.raises(ValueError):
        ComputationTree(np.array([VAR, CHK]), np.array([-1, 0]), np.array([0, 0]), np.array([0, 0]), np.zeros(2))


@pytest.mark.parametrize("l", [1, 2, 3])
def test_ms_on_tree_equals_graph_message(l):
    g = sample_irregular(DegreeDistribution.regular(3, 6), 12, 4)
    ix = g.edges
    for frame in range(3):
        # dyadic values: the graph forms app - beta, the tree sums extrinsics
        # directly, and only exact arithmetic makes those agree bit for bit
        gamma = dyadic(all_zero_llr(g.N, ChannelSpec(0.9), 2, frame))
        r = decode(g, gamma, DecoderConfig(MS, max_iter=l, early_stop=False, trace=TRACE_FULL))
        for e in range(g.edge_count):
            n, m = int(ix.edge_var[e]), int(ix.edge_chk[e])
            t = unroll_tree(g, n, exclude=m, depth=l).with_llr(gamma)
            assert tree_decode(t, MS) == r.trace.alpha[l, e]


def test_prune_without_erasures_is_identity():
    rng = np.random.default_rng(4)
    t = random_tree(rng, 3, llr_mean=2.0)
    t = ComputationTree(t.kind, t.parent, t.origin, t.level, np.where(t.kind == VAR, 5.0, 0.0))
    p = prune_erased(t)
    assert p.size == t.size and np.array_equal(p.kind, t.kind)


def test_prune_all_root_children():
    g = tree_graph()
    t = unroll_tree(g, 0, depth=1)
    llr = np.where(t.kind == VAR, 0.0, 0.0)
    llr[0] = 1.5
    t = ComputationTree(t.kind, t.parent, t.origin, t.level, llr)
    p = prune_erased(t)
    assert p.size == 1
    assert tree_decode(t, SCMS) == 1.5 == tree_decode(p, MS)


def test_prune_uses_erasure_trace():
    rng = np.random.default_rng(0)
    seen = 0
    for _ in range(300):
        t = random_tree(rng, 3)
        t = ComputationTree(t.kind, t.parent, t.origin, t.level, dyadic(t.llr))
        res = tree_run(t, SCMS)
        p = prune_erased(t, res)
        if p.size < t.size:
            seen += 1
            assert (res.trace.alpha == 0).any()
        assert p.kind[0] == VAR and p.size <= t.size
    assert seen > 20


def test_pruning_exact_on_dyadic_trees():
    matches, pruned = pruning_trials(200, depth=4, seed=7)
    assert matches == 200 and pruned > 20


def test_pruning_on_raw_floats_within_rounding():
    rng = np.random.default_rng(3)
    for _ in range(200):
        t = random_tree(rng, int(rng.integers(1, 5)))
        a, b = pruning_check(t)
        assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


def test_random_tree_limits():
    rng = np.random.default_rng(1)
    for _ in range(50):
        t = random_tree(rng, 4, max_nodes=60)
        assert t.size <= 60 and t.depth <= 4


def test_dyadic_rounding():
    x = dyadic(np.array([0.1, -1 / 3]))
    assert np.all(x * 2**20 == np.round(x * 2**20))
    assert np.allclose(x, [0.1, -1 / 3], atol=2**-20)
