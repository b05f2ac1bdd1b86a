"""Shared builders for the test suite.

Synthetic nerve graphs let the solver tests control topology exactly,
and the brute-force helpers here are kept deliberately independent of
the package internals: path enumeration is a plain DFS, cut search is
subset enumeration, and the convex reference solves use cvxpy.
"""
from __future__ import annotations

import itertools
from collections import deque

import numpy as np
import pytest

from confdim.nerve import CurveFamily, NerveGraph
from confdim.space import Covering


def make_graph(n: int, edge_list) -> NerveGraph:
    """Nerve graph with prescribed vertices and edges, one point per ball."""
    edges = np.array(sorted(set((min(u, v), max(u, v)) for u, v in edge_list)),
                     dtype=int).reshape(-1, 2)
    nb = [[] for _ in range(n)]
    for u, v in edges:
        nb[int(u)].append(int(v))
        nb[int(v)].append(int(u))
    neighbors = [np.asarray(sorted(l), dtype=int) for l in nb]
    cov = Covering(level=0, radius=1.0, centers=np.arange(n),
                   balls=[np.array([i]) for i in range(n)], space=None)
    return NerveGraph(cov, neighbors, edges)


def make_family(n: int, edge_list, sources, sinks, mandatory=()) -> CurveFamily:
    g = make_graph(n, edge_list)
    return CurveFamily(g, np.asarray(sorted(sources), dtype=int),
                       np.asarray(sorted(sinks), dtype=int),
                       np.asarray(sorted(mandatory), dtype=int))


def path_family(k: int, p_extra=()) -> CurveFamily:
    """A single chain 0-1-...-(k-1) from its first to its last vertex."""
    edges = [(i, i + 1) for i in range(k - 1)]
    return make_family(k, edges, [0], [k - 1], p_extra)


def enumerate_curves(neighbors, sources, sinks, cap: int = 10_000) -> list:
    """All simple paths that start in sources and stop on first sink hit."""
    sink_set = set(int(v) for v in sinks)
    out = []

    def dfs(v, path, seen):
        if len(out) > cap:
            return
        if v in sink_set:
            out.append(tuple(path))
            return
        for w in neighbors[v]:
            w = int(w)
            if w not in seen:
                seen.add(w)
                path.append(w)
                dfs(w, path, seen)
                path.pop()
                seen.remove(w)

    for s in sorted(set(int(v) for v in sources)):
        if s in sink_set:
            out.append((s,))
            continue
        dfs(s, [s], {s})
    return out


def separates(neighbors, sources, sinks, removed) -> bool:
    """True when deleting `removed` leaves no source-to-sink path."""
    removed = set(int(v) for v in removed)
    sink_set = set(int(v) for v in sinks) - removed
    seen = set()
    queue = deque(int(v) for v in sources if int(v) not in removed)
    seen.update(queue)
    while queue:
        v = queue.popleft()
        if v in sink_set:
            return False
        for w in neighbors[v]:
            w = int(w)
            if w not in seen and w not in removed:
                seen.add(w)
                queue.append(w)
    return True


def brute_min_cut(neighbors, sources, sinks, allowed):
    """Smallest separating subset of `allowed`, lexicographically first.

    Returns (size, tuple) or (None, None) when even removing all of
    `allowed` leaves a crossing path. Subset enumeration, so only for
    small graphs.
    """
    pool = sorted(int(v) for v in allowed)
    if not separates(neighbors, sources, sinks, pool):
        return None, None
    for size in range(len(pool) + 1):
        for cand in itertools.combinations(pool, size):
            if separates(neighbors, sources, sinks, cand):
                return size, cand
    raise AssertionError("unreachable")


def brute_modulus(n_vertices: int, curves, p: float) -> float:
    """Reference optimum over the fully enumerated constraint set."""
    import cvxpy as cp

    if not curves:
        return 0.0
    rho = cp.Variable(n_vertices, nonneg=True)
    cons = [cp.sum(rho[list(c)]) >= 1.0 for c in curves]
    if p == 1.0:
        objective = cp.sum(rho)
    else:
        objective = cp.sum(cp.power(rho, p))
    prob = cp.Problem(cp.Minimize(objective), cons)
    prob.solve(solver=cp.CLARABEL)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise AssertionError(f"reference solve failed: {prob.status}")
    return float(prob.value)


def random_instance(seed: int, max_vertices: int = 12, max_curves: int = 25):
    """Seeded random graph plus a source/sink family with few enough curves.

    Keeps drawing until the enumerated curve count lands in [1, max_curves],
    so every instance is solvable by the brute-force reference.
    """
    rng = np.random.default_rng(seed)
    for _ in range(200):
        n = int(rng.integers(5, max_vertices + 1))
        density = rng.uniform(0.2, 0.45)
        edge_list = [(i, j) for i in range(n) for j in range(i + 1, n)
                     if rng.random() < density]
        perm = [int(v) for v in rng.permutation(n)]
        n_src = int(rng.integers(1, 3))
        n_snk = int(rng.integers(1, 3))
        sources = perm[:n_src]
        sinks = perm[n_src:n_src + n_snk]
        fam = make_family(n, edge_list, sources, sinks)
        curves = enumerate_curves(fam.graph.neighbors, sources, sinks,
                                  cap=max_curves + 1)
        if 1 <= len(curves) <= max_curves:
            return fam, curves
    raise AssertionError(f"no usable instance for seed {seed}")


@pytest.fixture(scope="session")
def circle64():
    from confdim import GeneratorSpec, generate
    return generate(GeneratorSpec("circle", 64, {}))


@pytest.fixture(scope="session")
def circle64_hier(circle64):
    from confdim import build_net_hierarchy
    return build_net_hierarchy(circle64, 2.0, 5)


@pytest.fixture(scope="session")
def grid16():
    from confdim import GeneratorSpec, generate
    return generate(GeneratorSpec("square_grid", 16, {}))


@pytest.fixture(scope="session")
def grid16_hier(grid16):
    from confdim import build_net_hierarchy
    return build_net_hierarchy(grid16, 2.0, 4)


@pytest.fixture(scope="session")
def gasket3():
    from confdim import GeneratorSpec, generate
    return generate(GeneratorSpec("sierpinski_gasket", 3, {}))


@pytest.fixture(scope="session")
def gasket3_hier(gasket3):
    from confdim import build_net_hierarchy
    return build_net_hierarchy(gasket3, 2.0, 3)
