"""Nerve graphs of ball coverings and the curve families measured on them.

Vertices are covering balls; two balls are adjacent when they share a
point. A curve is a path in the nerve, and its length under a vertex
weight is the sum of the weights of the vertices it visits (endpoints
included, each visited vertex counted once per visit).
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .space import Covering


class NerveGraph:
    def __init__(self, covering: Covering, neighbors: list, edges: np.ndarray):
        self.covering = covering
        self.centers = covering.centers
        self.balls = covering.balls
        self.n_vertices = covering.size
        self.neighbors = neighbors          # per-vertex sorted np arrays
        self.edges = edges                  # (m, 2) array with u < v
        self._flat = (np.concatenate(self.balls) if self.balls
                      else np.empty(0, dtype=int))
        sizes = np.array([b.size for b in self.balls], dtype=int)
        self._offsets = np.concatenate(([0], np.cumsum(sizes)[:-1])) if len(sizes) else np.empty(0, dtype=int)
        self._point_vertices: list | None = None

    @property
    def space(self):
        return self.covering.space

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def ball_stats(self, dists: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-ball min and max of a per-point value array."""
        if self.n_vertices == 0:
            return np.empty(0), np.empty(0)
        vals = dists[self._flat]
        return (np.minimum.reduceat(vals, self._offsets),
                np.maximum.reduceat(vals, self._offsets))

    def point_to_vertices(self) -> list:
        """For each point id, the ascending vertex ids of balls holding it."""
        if self._point_vertices is None:
            lists: list[list[int]] = [[] for _ in range(self.space.n)]
            for v, ball in enumerate(self.balls):
                for p in ball:
                    lists[int(p)].append(v)
            self._point_vertices = [np.asarray(l, dtype=int) for l in lists]
        return self._point_vertices

    def degree_stats(self) -> dict:
        degs = np.array([len(nb) for nb in self.neighbors], dtype=int)
        return {
            "vertices": self.n_vertices,
            "edges": self.n_edges,
            "max_degree": int(degs.max()) if degs.size else 0,
            "mean_degree": float(degs.mean()) if degs.size else 0.0,
        }


def build_nerve(covering: Covering) -> NerveGraph:
    """Adjacency from shared points: balls overlap iff some point lies in both."""
    n = covering.size
    pair_set: set[tuple[int, int]] = set()
    incidence: dict[int, list[int]] = {}
    for v, ball in enumerate(covering.balls):
        for p in ball:
            incidence.setdefault(int(p), []).append(v)
    for verts in incidence.values():
        k = len(verts)
        for i in range(k):
            for j in range(i + 1, k):
                pair_set.add((verts[i], verts[j]))
    edges = np.array(sorted(pair_set), dtype=int).reshape(-1, 2)
    nb: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        nb[u].append(v)
        nb[v].append(u)
    neighbors = [np.asarray(sorted(l), dtype=int) for l in nb]
    return NerveGraph(covering, neighbors, edges)


@dataclass(eq=False)
class CurveFamily:
    """Paths from sources to sinks, optionally forced through a mandatory set.

    With mandatory vertices present a curve is valid when it visits at
    least one of them; lengths then decompose as (source leg) + (leg to a
    sink) - weight of the shared mandatory vertex.
    """
    graph: NerveGraph
    sources: np.ndarray
    sinks: np.ndarray
    mandatory: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    label: str = ""
    _aug: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def is_empty(self) -> bool:
        if self.sources.size == 0 or self.sinks.size == 0:
            return True
        return False

    def _augmented(self):
        """Static (rows, cols) of the two-virtual-node digraph for dijkstra.

        Every arc costs the weight of its head, so node V reaches any
        source at that source's weight and node V+1 any sink likewise.
        """
        if self._aug is None:
            g = self.graph
            V = g.n_vertices
            if g.n_edges:
                eu = g.edges[:, 0]
                ev = g.edges[:, 1]
                rows = np.concatenate([eu, ev])
                cols = np.concatenate([ev, eu])
            else:
                rows = np.empty(0, dtype=int)
                cols = np.empty(0, dtype=int)
            rows = np.concatenate([rows, np.full(self.sources.size, V, dtype=int),
                                   np.full(self.sinks.size, V + 1, dtype=int)])
            cols = np.concatenate([cols, self.sources, self.sinks]).astype(int)
            self._aug = (rows.astype(int), cols)
        return self._aug

    def min_length(self, rho: np.ndarray, need_path: bool = False):
        """Shortest curve length under rho, and a realizing path if asked.

        Returns (inf, None) for empty families. Ties between equal-length
        paths are resolved deterministically but not lexicographically;
        use shortest_curve_length for the lexicographic contract.
        """
        if self.is_empty:
            return float("inf"), None
        g = self.graph
        V = g.n_vertices
        rows, cols = self._augmented()
        rho = np.asarray(rho, dtype=float)
        data = np.append(rho, [0.0, 0.0])[cols]
        mat = csr_matrix((data, (rows, cols)), shape=(V + 2, V + 2))
        use_backward = self.mandatory.size > 0
        indices = [V, V + 1] if use_backward else [V]
        out = dijkstra(mat, directed=True, indices=indices,
                       return_predecessors=need_path)
        dist = out[0] if need_path else out
        pred = out[1] if need_path else None
        if not use_backward:
            f = dist[0][self.sinks]
            best = int(np.argmin(f))
            value = float(f[best])
            if not need_path or not np.isfinite(value):
                return value, None
            return value, _walk_back(pred[0], int(self.sinks[best]), V)
        f = dist[0][self.mandatory]
        b = dist[1][self.mandatory]
        tot = f + b - rho[self.mandatory]
        best = int(np.argmin(tot))
        value = float(tot[best])
        if not need_path or not np.isfinite(value):
            return value, None
        m = int(self.mandatory[best])
        fwd = _walk_back(pred[0], m, V)
        bwd = _walk_back(pred[1], m, V + 1)
        return value, fwd + tuple(reversed(bwd))[1:]

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "level": self.graph.covering.level,
            "sources": [int(v) for v in self.sources],
            "sinks": [int(v) for v in self.sinks],
            "mandatory": [int(v) for v in self.mandatory],
        }


def _walk_back(pred_row: np.ndarray, end: int, virtual: int) -> tuple:
    """Vertex sequence from the virtual start (excluded) up to end."""
    seq = []
    x = end
    while x != virtual:
        seq.append(int(x))
        x = int(pred_row[x])
        if x < 0:
            raise AssertionError("predecessor chain broken")
    return tuple(reversed(seq))


def annulus_family(hierarchy, nerve: NerveGraph, center: int, k: int) -> CurveFamily:
    """Curves from around B(center, a**-k) out past twice that radius.

    Sources are nerve balls meeting the closed ball, sinks are balls
    reaching strictly beyond the doubled one.
    """
    r = hierarchy.radius(k)
    d = hierarchy.space.dists_from(int(center))
    minb, maxb = nerve.ball_stats(d)
    sources = np.flatnonzero(minb <= r)
    sinks = np.flatnonzero(maxb > 2.0 * r)
    return CurveFamily(nerve, sources, sinks,
                       label=f"annulus(center={int(center)}, k={k})")


def point_family(nerve: NerveGraph, z: int, s: float) -> CurveFamily:
    """Curves through some ball holding z that escape past radius s from z.

    The balls holding z are both the sources and the mandatory set, so
    every admissible weight must pay for a ball actually containing z.
    """
    d = nerve.space.dists_from(int(z))
    minb, maxb = nerve.ball_stats(d)
    holders = np.flatnonzero(minb <= 0.0)
    sinks = np.flatnonzero(maxb > s)
    return CurveFamily(nerve, holders, sinks, mandatory=holders,
                       label=f"point(z={int(z)}, s={s:g})")


def shortest_curve_length(family: CurveFamily, rho: np.ndarray):
    """Exact shortest curve with lexicographically smallest vertex sequence.

    Pure-python Dijkstra carrying the path in the priority key, so equal
    lengths compare by vertex sequence. Meant for verification and small
    graphs; min_length is the fast route used inside solvers.
    """
    if family.is_empty:
        return float("inf"), None
    rho = np.asarray(rho, dtype=float)
    if family.mandatory.size == 0:
        labels = _lex_dijkstra(family.graph, family.sources, rho)
        best = None
        for t in sorted(int(v) for v in family.sinks):
            if t in labels and (best is None or labels[t] < best):
                best = labels[t]
        return (float("inf"), None) if best is None else (best[0], best[1])
    fwd = _lex_dijkstra(family.graph, family.sources, rho)
    bwd = _lex_dijkstra(family.graph, family.sinks, rho)
    best = None
    for m in sorted(int(v) for v in family.mandatory):
        if m not in fwd or m not in bwd:
            continue
        value = fwd[m][0] + bwd[m][0] - float(rho[m])
        seq = fwd[m][1] + tuple(reversed(bwd[m][1]))[1:]
        cand = (value, seq)
        if best is None or cand < best:
            best = cand
    return (float("inf"), None) if best is None else best


def _lex_dijkstra(graph: NerveGraph, seeds, rho: np.ndarray) -> dict:
    """Final labels v -> (cost, path) with lexicographic tie-breaking."""
    heap = []
    for s in sorted(int(v) for v in set(int(v) for v in seeds)):
        heapq.heappush(heap, (float(rho[s]), (s,)))
    done: dict[int, tuple] = {}
    while heap:
        cost, path = heapq.heappop(heap)
        v = path[-1]
        if v in done:
            continue
        done[v] = (cost, path)
        for w in graph.neighbors[v]:
            w = int(w)
            if w not in done:
                heapq.heappush(heap, (cost + float(rho[w]), path + (w,)))
    return done
