"""Vertex cuts by max flow against subset-enumeration references."""
import numpy as np
import pytest

from confdim.flows import min_vertex_cut

from conftest import brute_min_cut, make_graph, separates


def _neighbors(n, edge_list):
    return make_graph(n, edge_list).neighbors


def test_path_graph_single_cut():
    nb = _neighbors(4, [(0, 1), (1, 2), (2, 3)])
    res = min_vertex_cut(4, nb, [0], [3], [1, 2])
    assert res.finite and res.size == 1
    assert tuple(res.vertices) == (1,)  # lexicographically first of the two cuts


def test_cycle_needs_two():
    edges = [(i, (i + 1) % 6) for i in range(6)]
    nb = _neighbors(6, edges)
    res = min_vertex_cut(6, nb, [0], [3], [1, 2, 4, 5])
    assert res.finite and res.size == 2
    assert tuple(res.vertices) == (1, 4)  # lex-first pick from each arc


def test_infinite_when_endpoints_uncuttable():
    nb = _neighbors(3, [(0, 1), (1, 2)])
    res = min_vertex_cut(3, nb, [0], [2], allowed=[])
    assert not res.finite


def test_adjacent_source_sink_has_no_cut():
    nb = _neighbors(2, [(0, 1)])
    res = min_vertex_cut(2, nb, [0], [1], allowed=[])
    assert not res.finite


def test_endpoints_allowed_cut_of_one():
    nb = _neighbors(2, [(0, 1)])
    res = min_vertex_cut(2, nb, [0], [1], allowed=[0])
    assert res.finite and res.size == 1 and tuple(res.vertices) == (0,)


def test_disconnected_cut_is_empty():
    nb = _neighbors(4, [(0, 1), (2, 3)])
    res = min_vertex_cut(4, nb, [0], [3], allowed=[1, 2])
    assert res.finite and res.size == 0 and tuple(res.vertices) == ()


@pytest.mark.parametrize("seed", range(40))
def test_random_cuts_match_enumeration(seed):
    """Size and lexicographic identity of the cut against brute force."""
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(4, 10))
    density = rng.uniform(0.25, 0.6)
    edge_list = [(i, j) for i in range(n) for j in range(i + 1, n)
                 if rng.random() < density]
    perm = [int(v) for v in rng.permutation(n)]
    sources = perm[:1 + int(rng.integers(0, 2))]
    rest = [v for v in perm if v not in sources]
    if not rest:
        pytest.skip("degenerate draw")
    sinks = rest[:1 + int(rng.integers(0, 2))]
    pool = [v for v in range(n) if v not in sources and v not in sinks]
    if rng.random() < 0.4:
        pool = sorted(set(pool) | set(sources[:1]))
    nb = _neighbors(n, edge_list)
    got = min_vertex_cut(n, nb, sources, sinks, pool)
    size, cut = brute_min_cut(nb, sources, sinks, pool)
    if size is None:
        assert not got.finite
        return
    assert got.finite
    assert got.size == size
    assert tuple(got.vertices) == cut
    assert separates(nb, sources, sinks, got.vertices)


@pytest.mark.parametrize("seed", range(12))
def test_canonical_cut_matches_flow_value(seed):
    """lex=False returns a residual-boundary cut of exactly the flow size."""
    rng = np.random.default_rng(2000 + seed)
    n = int(rng.integers(5, 10))
    edge_list = [(i, j) for i in range(n) for j in range(i + 1, n)
                 if rng.random() < 0.5]
    nb = _neighbors(n, edge_list)
    sources, sinks = [0], [n - 1]
    pool = list(range(1, n - 1))
    got = min_vertex_cut(n, nb, sources, sinks, pool, lex=False)
    size, _ = brute_min_cut(nb, sources, sinks, pool)
    if size is None:
        assert not got.finite
    else:
        assert got.size == size
        assert separates(nb, sources, sinks, got.vertices)


def test_grid_cut_scales_with_width():
    """On a w x w lattice a left-right cut needs a full column."""
    for w in (3, 4, 5):
        n = w * w
        edges = []
        for i in range(w):
            for j in range(w):
                v = i * w + j
                if j + 1 < w:
                    edges.append((v, v + 1))
                if i + 1 < w:
                    edges.append((v, v + w))
        nb = _neighbors(n, edges)
        left = [i * w for i in range(w)]
        right = [i * w + w - 1 for i in range(w)]
        pool = [v for v in range(n) if v not in left and v not in right]
        res = min_vertex_cut(n, nb, left, right, pool)
        assert res.finite and res.size == w
