"""Max flow and minimum vertex cuts on undirected graphs via node splitting.

Vertices allowed in the cut get a unit-capacity split edge, everything else
gets effectively infinite capacity, so a max flow equals the size of the
smallest allowed separator (Menger). Among equal-size cuts the functions
below return the lexicographically smallest vertex set, found greedily by
testing, in ascending id order, whether a minimum cut through the committed
prefix plus the candidate still exists.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

INF = 1 << 30


@dataclass
class VertexCutResult:
    finite: bool
    size: int              # cut size; meaningless when not finite
    vertices: list         # ascending vertex ids; empty when not finite
    flow_value: int


class _FlowNet:
    """Residual network with edge pairs stored at indices e, e^1."""

    def __init__(self, n: int):
        self.n = n
        self.head = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[int] = []
        self.orig: list[int] = []

    def add_edge(self, u: int, v: int, cap: int) -> int:
        e = len(self.to)
        self.head[u].append(e)
        self.to.append(v)
        self.cap.append(cap)
        self.orig.append(cap)
        self.head[v].append(e + 1)
        self.to.append(u)
        self.cap.append(0)
        self.orig.append(0)
        return e

    def bfs_augment(self, s: int, t: int) -> bool:
        """Push one unit along a shortest residual path, if any."""
        parent = [-1] * self.n
        parent[s] = -2
        q = deque([s])
        while q:
            u = q.popleft()
            if u == t:
                break
            for e in self.head[u]:
                v = self.to[e]
                if self.cap[e] > 0 and parent[v] == -1:
                    parent[v] = e
                    q.append(v)
        if parent[t] == -1:
            return False
        v = t
        while v != s:
            e = parent[v]
            self.cap[e] -= 1
            self.cap[e ^ 1] += 1
            v = self.to[e ^ 1]
        return True

    def max_flow(self, s: int, t: int, limit: int) -> int:
        flow = 0
        while flow < limit and self.bfs_augment(s, t):
            flow += 1
        return flow

    def cancel_unit_through(self, e_split: int, s: int, t: int) -> None:
        """Remove one unit of flow passing through a saturated split edge."""
        v_in = self.to[e_split ^ 1]
        v_out = self.to[e_split]
        # forward from v_out to t along flow-carrying edges
        x = v_out
        while x != t:
            for e in self.head[x]:
                if self.orig[e] > 0 and self.cap[e] < self.orig[e]:
                    self.cap[e] += 1
                    self.cap[e ^ 1] -= 1
                    x = self.to[e]
                    break
            else:
                raise AssertionError("flow conservation broken on forward trace")
        # backward from v_in to s along reverse residual edges
        x = v_in
        while x != s:
            for e in self.head[x]:
                if self.orig[e] == 0 and self.cap[e] > 0:
                    self.cap[e] -= 1
                    self.cap[e ^ 1] += 1
                    x = self.to[e]
                    break
            else:
                raise AssertionError("flow conservation broken on backward trace")
        # the split edge itself
        self.cap[e_split] += 1
        self.cap[e_split ^ 1] -= 1


def min_vertex_cut(n: int, neighbors, sources, sinks, allowed, lex: bool = True) -> VertexCutResult:
    """Smallest allowed vertex set separating sources from sinks.

    neighbors: adjacency, indexable per vertex. Sources and sinks may be
    cut themselves when listed in allowed. Returns finite=False when no
    allowed separator exists (some path avoids every allowed vertex).
    """
    sources = sorted(set(int(v) for v in sources))
    sinks_set = set(int(v) for v in sinks)
    allowed_set = set(int(v) for v in allowed)
    if not sources or not sinks_set:
        return VertexCutResult(True, 0, [], 0)

    net = _FlowNet(2 * n + 2)
    S, T = 2 * n, 2 * n + 1
    split_edge = {}
    for v in range(n):
        cap = 1 if v in allowed_set else INF
        split_edge[v] = net.add_edge(2 * v, 2 * v + 1, cap)
    seen = set()
    for u in range(n):
        for v in neighbors[u]:
            v = int(v)
            key = (u, v) if u < v else (v, u)
            if u == v or key in seen:
                continue
            seen.add(key)
            net.add_edge(2 * key[0] + 1, 2 * key[1], INF)
            net.add_edge(2 * key[1] + 1, 2 * key[0], INF)
    for v in sources:
        net.add_edge(S, 2 * v, INF)
    for v in sorted(sinks_set):
        net.add_edge(2 * v + 1, T, INF)

    limit = len(allowed_set) + 1
    flow = net.max_flow(S, T, limit)
    if flow > len(allowed_set):
        return VertexCutResult(False, 0, [], flow)
    if not lex:
        # canonical cut: saturated allowed split edges on the residual boundary
        reach = _residual_reach(net, S)
        cut = [v for v in sorted(allowed_set)
               if net.cap[split_edge[v]] == 0
               and (2 * v) in reach and (2 * v + 1) not in reach]
        if len(cut) != flow:
            raise AssertionError("residual boundary does not match flow value")
        return VertexCutResult(True, flow, cut, flow)

    target = flow
    cut = []
    for v in sorted(allowed_set):
        if target == 0:
            break
        e = split_edge[v]
        if net.cap[e] != 0:
            continue  # unsaturated vertices are in no minimum cut
        net.cancel_unit_through(e, S, T)
        net.cap[e] = 0
        net.cap[e ^ 1] = 0
        if net.bfs_augment(S, T):
            # a same-size cut avoiding v exists once committed ones are gone
            net.cap[e] = 1
            net.cap[e ^ 1] = 0
        else:
            cut.append(v)
            target -= 1
    if target != 0:
        raise AssertionError("lexicographic cut refinement lost flow units")
    return VertexCutResult(True, flow, cut, flow)


def _residual_reach(net: _FlowNet, s: int) -> set:
    reach = {s}
    q = deque([s])
    while q:
        u = q.popleft()
        for e in net.head[u]:
            v = net.to[e]
            if net.cap[e] > 0 and v not in reach:
                reach.add(v)
                q.append(v)
    return reach
