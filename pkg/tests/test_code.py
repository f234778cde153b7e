import itertools

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from scms.code import (
    CodeFormatError,
    ConstructionError,
    DegreeDistribution,
    QcBaseMatrix,
    TannerGraph,
    degree_distributions,
    degree_sequences,
    expand_qc,
    load_alist,
    load_qc,
    sample_irregular,
    syndrome,
    syndrome_ok,
    to_alist,
)

# rows {110, 011}
ALIST_2x3 = """3 2
2 2
1 2 1
2 2
1 0
1 2
2 0
1 2
2 3
"""


def adjacency_symmetric(g: TannerGraph) -> bool:
    fwd = {(n, m) for n in range(g.N) for m in g.var_adj[n]}
    bwd = {(n, m) for m in range(g.M) for n in g.chk_adj[m]}
    return fwd == bwd


def test_alist_small_matrix():
    g = load_alist(ALIST_2x3)
    assert (g.N, g.M) == (3, 2)
    assert tuple(g.var_degrees) == (1, 2, 1)
    assert tuple(g.chk_degrees) == (2, 2)
    assert g.pcm().toarray().tolist() == [[1, 1, 0], [0, 1, 1]]


def test_alist_empty_input():
    with pytest.raises(CodeFormatError):
        load_alist("")


def test_alist_out_of_range_index_names_line():
    bad = ALIST_2x3.replace("2 3\n", "2 4\n")
    with pytest.raises(CodeFormatError, match="line 9"):
        load_alist(bad)


@pytest.mark.parametrize(
    "text",
    [
        "3\n",  # malformed header
        ALIST_2x3.replace("1 2 1", "1 2 2"),  # degree list disagrees with neighbours
        ALIST_2x3.replace("1 2\n2 0\n1 2\n", "1 1\n2 0\n1 2\n"),  # parallel edge
        ALIST_2x3 + "7\n",  # trailing content
    ],
)
def test_alist_malformed(text):
    with pytest.raises(CodeFormatError, match="line"):
        load_alist(text)


def test_alist_round_trip(mixed_fixture, small_code):
    for g in (load_alist(ALIST_2x3), mixed_fixture, small_code):
        assert load_alist(to_alist(g)) == g


def test_qc_identity_and_shift():
    g = expand_qc(QcBaseMatrix(((0,),), 3))
    assert g.edge_count == 3 and set(g.var_degrees) == {1} and set(g.chk_degrees) == {1}
    assert [list(a) for a in g.chk_adj] == [[0], [1], [2]]
    g = expand_qc(QcBaseMatrix(((1,),), 3))
    assert [list(a) for a in g.chk_adj] == [[(k + 1) % 3] for k in range(3)]


def test_qc_2x4_z96():
    rng = np.random.default_rng(0)
    shifts = tuple(tuple(int(s) for s in row) for row in rng.integers(0, 96, size=(2, 4)))
    g = expand_qc(QcBaseMatrix(shifts, 96))
    assert (g.N, g.M, g.edge_count) == (384, 192, 768)
    # direct enumeration of the lifted matrix
    H = np.zeros((192, 384), dtype=int)
    for r, c in itertools.product(range(2), range(4)):
        for k in range(96):
            H[r * 96 + k, c * 96 + (k + shifts[r][c]) % 96] = 1
    assert int(H.sum()) == 768
    assert np.array_equal(g.pcm().toarray(), H)


def test_qc_shift_out_of_range():
    with pytest.raises(ValueError):
        QcBaseMatrix(((3,),), 3)
    with pytest.raises(CodeFormatError, match="line 3"):
        load_qc("# base\n1 1 3\n3\n")


def test_qc_text_format():
    base = load_qc("2 3 4\n0 -1 2\n# comment\n1 3 -1\n")
    assert base.shifts == ((0, -1, 2), (1, 3, -1)) and base.z == 4
    assert expand_qc(base).edge_count == 4 * 4


@given(st.integers(1, 6), st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31))
@settings(max_examples=40, deadline=None)
def test_qc_edge_count_property(z, rows, cols, seed):
    rng = np.random.default_rng(seed)
    grid = rng.integers(-1, z, size=(rows, cols))
    grid[:, 0] = rng.integers(0, z, size=rows)  # every check row non-empty
    grid[0, :] = rng.integers(0, z, size=cols)  # every variable column non-empty
    g = expand_qc(QcBaseMatrix(tuple(map(tuple, grid.tolist())), z))
    assert g.edge_count == z * int((grid >= 0).sum())
    assert adjacency_symmetric(g)


def test_regular_3_6_small():
    d = DegreeDistribution.regular(3, 6)
    g = sample_irregular(d, 12, seed=3)
    assert (g.N, g.M, g.edge_count) == (12, 6, 36)
    assert set(g.var_degrees) == {3} and set(g.chk_degrees) == {6}
    assert sample_irregular(d, 12, seed=3) == g
    assert adjacency_symmetric(g)


def test_regular_3_6_measured_distribution():
    d = DegreeDistribution.regular(3, 6)
    g = sample_irregular(d, 1000, seed=1)
    m = degree_distributions(g)
    assert m.lam == {3: 1.0} and m.rho == {6: 1.0}


def test_irregular_distribution_recovered(desk_code):
    d = DegreeDistribution.parse("3:0.15,4:0.85;7:0.35,8:0.65")
    assert desk_code.N == 2000 and desk_code.M == 1000
    # node counts are rounded, so edge fractions match to rounding only
    assert degree_distributions(desk_code).isclose(d, 1e-3)
    vs, cs = degree_sequences(d, 2000)
    assert sorted(desk_code.var_degrees.tolist()) == sorted(vs)
    assert sorted(desk_code.chk_degrees.tolist()) == sorted(cs)
    assert adjacency_symmetric(desk_code)
    assert min(desk_code.var_degrees) >= 2


def test_measured_distribution_identity_graph():
    g = expand_qc(QcBaseMatrix(((0,),), 3))
    m = degree_distributions(g)
    assert m.lam == {1: 1.0} and m.rho == {1: 1.0}


def test_measured_distribution_fixture(mixed_fixture):
    m = degree_distributions(mixed_fixture)
    # hand count: 15 edges; variable degrees 1,1 / 2 x5 / 3; checks 4 x3 / 3
    assert m.isclose(DegreeDistribution({1: 2 / 15, 2: 10 / 15, 3: 3 / 15}, {3: 3 / 15, 4: 12 / 15}))


def test_infeasible_degrees():
    # 3 variables of degree 3 give 9 edges; degree-4 checks cannot sum to 9
    with pytest.raises(ConstructionError):
        degree_sequences(DegreeDistribution.regular(3, 4), 3)


def test_degree_distribution_validation():
    with pytest.raises(ValueError):
        DegreeDistribution({2: 0.5, 3: 0.4}, {6: 1.0})
    d = DegreeDistribution.parse("2:0.3,3:0.7;6:1")
    assert d.lam_poly(1.0) == pytest.approx(1.0) and d.rho_poly(1.0) == pytest.approx(1.0)
    assert DegreeDistribution.parse(d.spec()) == d


def test_syndrome_examples(mixed_fixture):
    g = mixed_fixture
    assert syndrome_ok(g, np.zeros(g.N, dtype=int))
    for n in range(g.N):
        e = np.zeros(g.N, dtype=int)
        e[n] = 1
        assert not syndrome_ok(g, e)
    with pytest.raises(ValueError):
        syndrome_ok(g, np.zeros(g.N + 1, dtype=int))


@given(st.lists(st.integers(0, 1), min_size=8, max_size=8))
def test_syndrome_matches_gf2_product(bits):
    H = np.array([
        [1, 1, 0, 0, 1, 1, 0, 0],
        [0, 1, 1, 0, 0, 1, 1, 0],
        [0, 0, 1, 1, 0, 0, 1, 0],
        [0, 0, 0, 1, 1, 1, 0, 1],
    ])
    g = TannerGraph.from_matrix(H)
    expect = [sum(H[m, n] * bits[n] for n in range(8)) % 2 for m in range(4)]
    assert syndrome(g, bits).tolist() == expect


def test_graph_rejects_inconsistent_adjacency():
    with pytest.raises(ValueError):
        TannerGraph(2, 1, ((0,), ()), ((0, 1),))
    with pytest.raises(ValueError):
        TannerGraph.from_edges(2, 1, [(0, 0), (0, 0), (1, 0)])


@given(st.integers(0, 10_000), st.sampled_from(["3,6", "2:0.3,3:0.7;6:1", "2:0.3,3:0.7;6:0.5,7:0.5", "3:0.15,4:0.85;7:0.35,8:0.65"]))
@settings(max_examples=20, deadline=None)
def test_sampled_graphs_valid(seed, ens):
    d = DegreeDistribution.parse(ens)
    try:
        vs, cs = degree_sequences(d, 120)
    except ConstructionError:
        assume(False)
    g = sample_irregular(d, 120, seed)
    assert adjacency_symmetric(g)
    assert all(len(set(a)) == len(a) for a in g.var_adj)
    assert sorted(g.var_degrees.tolist()) == sorted(vs)
    assert sorted(g.chk_degrees.tolist()) == sorted(cs)
