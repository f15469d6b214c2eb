import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperfiedler.errors import EmptyWindow
from hyperfiedler.marketdata import ReturnPanel, SectorMap
from hyperfiedler.netbuild import (
    Adjacency,
    CorrMatrix,
    WindowSpec,
    build_hypergraph,
    correlation_matrix,
    enumerate_cliques,
    make_windows,
    threshold_adjacency,
)
from hyperfiedler.synth import brute_force_cliques


def dates(n):
    return np.arange(np.datetime64("2020-01-01"), np.datetime64("2020-01-01") + n)


def graph(n, pairs, weights=None):
    E = np.zeros((n, n), dtype=bool)
    for a, b in pairs:
        E[a, b] = E[b, a] = True
    W = np.where(E, 0.6 if weights is None else weights, 0.0)
    return Adjacency(tickers=tuple(f"v{i}" for i in range(n)), edges=E, weights=W)


def random_graph(rng, n, p):
    upper = np.triu(rng.random((n, n)) < p, 1)
    E = upper | upper.T
    W = np.where(E, np.round(rng.uniform(0.3, 1.0, (n, n)), 3), 0.0)
    W = np.triu(W, 1) + np.triu(W, 1).T
    return Adjacency(tickers=tuple(f"v{i}" for i in range(n)), edges=E, weights=W)


def full_window(n):
    return WindowSpec(np.datetime64("2020-01-01"), 0, n, "post", 0, n)


# -- windows ---------------------------------------------------------------

def test_window_counts():
    assert len(make_windows(dates(41), 20)) == 1
    assert make_windows(dates(41), 20)[0][0].reference_index == 20
    assert make_windows(dates(10), 5) == []


def test_window_bounds():
    (pre, post), = make_windows(dates(11), 5)
    assert (pre.start, pre.stop) == (0, 5)
    assert (post.start, post.stop) == (6, 11)


@pytest.mark.parametrize("k", [5, 7, 13, 20])
def test_windows_never_touch_reference(k):
    for pre, post in make_windows(dates(3 * k + 4), k):
        t = pre.reference_index
        assert pre.stop - pre.start == k == post.stop - post.start
        assert not pre.start <= t < pre.stop and not post.start <= t < post.stop
        assert pre.stop <= post.start


def test_horizon_range():
    with pytest.raises(ValueError):
        make_windows(dates(100), 4)
    with pytest.raises(ValueError):
        make_windows(dates(100), 21)


# -- correlations ----------------------------------------------------------

def test_identical_and_opposite_series():
    x = np.random.default_rng(0).normal(size=10)
    p = ReturnPanel(dates=dates(10), tickers=["a", "b", "c"], values=np.column_stack([x, x, -x]))
    c = correlation_matrix(p, full_window(10))
    assert c["a", "b"] == pytest.approx(1.0, abs=1e-12)
    assert c["a", "c"] == pytest.approx(-1.0, abs=1e-12)
    np.testing.assert_array_equal(np.diag(c.values), 1.0)


def two_pass_corr(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def test_matches_two_pass_oracle():
    rng = np.random.default_rng(5)
    v = rng.normal(size=(30, 5))
    p = ReturnPanel(dates=dates(30), tickers=list("abcde"), values=v)
    w = WindowSpec(np.datetime64("2020-01-10"), 9, 10, "post", 10, 20)
    c = correlation_matrix(p, w)
    for i, j in combinations(range(5), 2):
        assert c.values[i, j] == pytest.approx(two_pass_corr(v[10:20, i], v[10:20, j]), abs=1e-12)
    assert np.array_equal(c.values, c.values.T)


def test_pairwise_complete_with_gaps():
    rng = np.random.default_rng(6)
    v = rng.normal(size=(20, 4))
    v[2, 0] = v[7, 1] = v[11, 1] = np.nan
    p = ReturnPanel(dates=dates(20), tickers=list("abcd"), values=v)
    c = correlation_matrix(p, full_window(20), min_pair_obs=4, min_stock_obs=10)
    ok = ~np.isnan(v[:, 0]) & ~np.isnan(v[:, 1])
    assert c["a", "b"] == pytest.approx(two_pass_corr(v[ok, 0], v[ok, 1]), abs=1e-12)
    assert c.counts[0, 1] == ok.sum()
    ok = ~np.isnan(v[:, 1])
    assert c["b", "d"] == pytest.approx(two_pass_corr(v[ok, 1], v[ok, 3]), abs=1e-12)


def test_sparse_stock_dropped_and_empty_window():
    rng = np.random.default_rng(1)
    v = rng.normal(size=(10, 3))
    v[:6, 2] = np.nan
    p = ReturnPanel(dates=dates(10), tickers=list("abc"), values=v)
    assert correlation_matrix(p, full_window(10)).tickers == ("a", "b")
    v[:6, 1] = np.nan
    with pytest.raises(EmptyWindow):
        correlation_matrix(ReturnPanel(dates=dates(10), tickers=list("abc"), values=v), full_window(10))


# -- thresholds ------------------------------------------------------------

def corr_of(rho, tickers=("a", "b")):
    m = np.array([[1.0, rho], [rho, 1.0]])
    return CorrMatrix(tickers=tickers, values=m, counts=np.full((2, 2), 10))


def test_dual_thresholds():
    same = SectorMap({"a": "X", "b": "X"})
    cross = SectorMap({"a": "X", "b": "Y"})
    assert threshold_adjacency(corr_of(0.35), same).n_edges == 1
    assert threshold_adjacency(corr_of(0.35), cross).n_edges == 0
    assert threshold_adjacency(corr_of(0.50), cross).n_edges == 1


def test_unknown_sector_is_cross():
    sm = SectorMap({"a": "UNKNOWN", "b": "UNKNOWN"})
    assert threshold_adjacency(corr_of(0.4), sm).n_edges == 0


def test_signed_versus_absolute():
    sm = SectorMap({"a": "X", "b": "X"})
    assert threshold_adjacency(corr_of(-0.6), sm).n_edges == 0
    assert threshold_adjacency(corr_of(-0.6), sm, absolute=True).n_edges == 1


def test_threshold_validation():
    with pytest.raises(ValueError):
        threshold_adjacency(corr_of(0.4), SectorMap({}), 0.6, 0.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 0.9))
def test_equal_thresholds_ignore_sectors(seed, theta):
    rng = np.random.default_rng(seed)
    n = 12
    A = rng.uniform(-1, 1, (n, n))
    C = np.triu(A, 1) + np.triu(A, 1).T + np.eye(n)
    tickers = tuple(f"t{i}" for i in range(n))
    corr = CorrMatrix(tickers=tickers, values=C, counts=np.full((n, n), 20))
    sm = SectorMap({t: f"s{rng.integers(3)}" for t in tickers})
    blind = (C >= theta) & ~np.eye(n, dtype=bool)
    np.testing.assert_array_equal(threshold_adjacency(corr, sm, theta, theta).edges, blind)


# -- cliques ---------------------------------------------------------------

def test_triangle_and_square():
    assert enumerate_cliques(graph(3, [(0, 1), (1, 2), (0, 2)])).as_sets() == {frozenset({0, 1, 2})}
    assert len(enumerate_cliques(graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)]))) == 0


def test_erdos_renyi_seed7_matches_oracle():
    adj = random_graph(np.random.default_rng(7), 12, 0.5)
    assert enumerate_cliques(adj, max_cliques=None).as_sets() == brute_force_cliques(adj)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(4, 13), st.sampled_from([0.2, 0.5, 0.8]))
def test_oracle_equivalence(seed, n, p):
    adj = random_graph(np.random.default_rng(seed), n, p)
    cs = enumerate_cliques(adj, max_cliques=None)
    assert not cs.fallback_used
    assert cs.as_sets() == brute_force_cliques(adj)
    for c in cs.cliques:
        assert all(adj.edges[a, b] for a, b in combinations(c, 2))


def test_oversize_clique_trimmed_to_strongest():
    n = 14
    W = np.full((n, n), 0.6)
    W[0, :] = W[:, 0] = 0.31  # weakest two members
    W[1, :] = W[:, 1] = 0.32
    np.fill_diagonal(W, 0.0)
    adj = Adjacency(tickers=tuple(f"v{i}" for i in range(n)), edges=~np.eye(n, dtype=bool), weights=W)
    cs = enumerate_cliques(adj)
    assert cs.oversize == 1
    assert cs.cliques == (tuple(range(2, 14)),)


def test_split_oversize():
    n = 13
    adj = graph(n, combinations(range(n), 2))
    cs = enumerate_cliques(adj, split_oversize=True)
    assert len(cs) == 13 and all(len(c) == 12 for c in cs.cliques)


def test_cap_keeps_largest_then_heaviest():
    # 10 disjoint triangles plus one K4; cap 3 keeps the K4 first
    pairs = [(3 * i + a, 3 * i + b) for i in range(10) for a, b in ((0, 1), (1, 2), (0, 2))]
    pairs += list(combinations(range(30, 34), 2))
    W = np.zeros((34, 34))
    for i, (a, b) in enumerate(pairs):
        W[a, b] = W[b, a] = 0.5 + 0.01 * (i // 3 if a < 30 else 0)
    adj = graph(34, pairs, W)
    cs = enumerate_cliques(adj, max_cliques=3)
    assert cs.truncated
    assert cs.cliques[0] == (30, 31, 32, 33)
    assert cs.cliques[1:] == ((27, 28, 29), (24, 25, 26))


def test_budget_fallback_returns_triangles():
    adj = random_graph(np.random.default_rng(2), 12, 0.8)
    cs = enumerate_cliques(adj, budget=5, max_cliques=None)
    assert cs.fallback_used
    tri = {frozenset(c) for c in combinations(range(12), 3)
           if all(adj.edges[a, b] for a, b in combinations(c, 2))}
    assert cs.as_sets() == tri


def test_clique_enumeration_is_deterministic():
    adj = random_graph(np.random.default_rng(9), 30, 0.4)
    assert enumerate_cliques(adj) == enumerate_cliques(adj)


# -- hypergraph ------------------------------------------------------------

def test_single_hyperedge_assembly():
    hg = build_hypergraph([("a", "b", "c")])
    np.testing.assert_array_equal(hg.incidence.toarray(), np.ones((3, 1)))
    np.testing.assert_array_equal(hg.vertex_degrees, [1, 1, 1])
    np.testing.assert_array_equal(hg.edge_sizes, [3])


def test_shared_vertex_degree():
    hg = build_hypergraph([("a", "b", "c"), ("c", "d", "e")], universe=list("abcdef"))
    deg = dict(zip(hg.vertices, hg.vertex_degrees))
    assert deg == {"a": 1, "b": 1, "c": 2, "d": 1, "e": 1}
    assert hg.uncovered == ("f",)
    H = hg.incidence.toarray()
    np.testing.assert_array_equal(H.sum(axis=0), hg.edge_sizes)
    np.testing.assert_array_equal(H.sum(axis=1), hg.vertex_degrees)


def test_empty_hypergraph():
    hg = build_hypergraph(enumerate_cliques(graph(4, [(0, 1)])))
    assert hg.empty and hg.vertices == () and len(hg.uncovered) == 4


def test_hypergraph_from_cliqueset_is_deterministic():
    adj = random_graph(np.random.default_rng(4), 25, 0.4)
    a = build_hypergraph(enumerate_cliques(adj))
    b = build_hypergraph(enumerate_cliques(adj))
    assert a.hyperedges == b.hyperedges and a.vertices == b.vertices
    assert (a.incidence != b.incidence).nnz == 0
    assert all(3 <= s <= 12 for s in a.edge_sizes)
