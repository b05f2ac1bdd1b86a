"""Finite metric spaces, net hierarchies and ball coverings.

A space is a finite point set carrying either an ambient Euclidean embedding
or an explicit distance matrix. All spaces are rescaled to diameter 1 on
construction, so radii of the form a**-i are comparable across inputs.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger("confdim.space")

DIAMETER_TOL = 1e-12
TRIANGLE_TOL = 1e-9
FULL_TRIANGLE_LIMIT = 500
SEPARATION_TOL = 1e-12
MAX_MATRIX_POINTS = 20_000


class SpaceValidationError(ValueError):
    """Raised when an input fails the metric-space checks."""


class FiniteMetricSpace:
    """Point ids 0..N-1 with a metric, normalized so the diameter is 1.

    Coordinate-backed spaces keep only the embedding and compute distance
    rows on demand, which keeps 1e5-point clouds affordable. Matrix-backed
    spaces store the full symmetric matrix.
    """

    def __init__(self, label: str, *, coords: np.ndarray | None = None,
                 matrix: np.ndarray | None = None, seed: int = 0):
        if (coords is None) == (matrix is None):
            raise SpaceValidationError("exactly one of coords or matrix is required")
        self.label = label
        self._coords = None
        self._matrix = None
        if coords is not None:
            coords = np.asarray(coords, dtype=float)
            if coords.ndim == 1:
                coords = coords[:, None]
            if coords.ndim != 2 or coords.shape[0] == 0:
                raise SpaceValidationError("empty point set")
            self._coords = coords
        else:
            matrix = np.asarray(matrix, dtype=float)
            if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
                raise SpaceValidationError("distance matrix must be square")
            if matrix.shape[0] == 0:
                raise SpaceValidationError("empty point set")
            if matrix.shape[0] > MAX_MATRIX_POINTS:
                raise SpaceValidationError(
                    f"matrix-backed space with {matrix.shape[0]} points exceeds the "
                    f"{MAX_MATRIX_POINTS}-point limit")
            self._matrix = matrix
        self._min_positive = None
        self._normalize()
        self._validate(seed)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_points(cls, points, label: str = "points", seed: int = 0) -> "FiniteMetricSpace":
        return cls(label, coords=points, seed=seed)

    @classmethod
    def from_matrix(cls, matrix, label: str = "matrix", seed: int = 0) -> "FiniteMetricSpace":
        return cls(label, matrix=matrix, seed=seed)

    def _normalize(self) -> None:
        n = self.n
        if n == 1:
            return
        diam = 0.0
        for i in range(n):
            diam = max(diam, float(self.dists_from(i).max()))
        if diam <= 0.0:
            raise SpaceValidationError("all points coincide; diameter is zero")
        if self._coords is not None:
            self._coords = self._coords / diam
        else:
            self._matrix = self._matrix / diam
        check = max(float(self.dists_from(i).max()) for i in range(n))
        if abs(check - 1.0) > DIAMETER_TOL:
            raise SpaceValidationError(f"normalization failed, diameter {check!r}")

    def _validate(self, seed: int) -> None:
        n = self.n
        if self._matrix is not None:
            m = self._matrix
            if not np.all(np.isfinite(m)):
                raise SpaceValidationError("distance matrix has non-finite entries")
            if np.abs(m - m.T).max() > TRIANGLE_TOL:
                raise SpaceValidationError("distance matrix is not symmetric")
            if np.abs(np.diag(m)).max() > 0.0:
                raise SpaceValidationError("distance matrix has nonzero diagonal")
        # strictly positive off-diagonal distances, and cache the minimum
        if n > 1:
            mp = math.inf
            for i in range(n):
                row = self.dists_from(i)
                pos = np.delete(row, i)
                small = float(pos.min())
                if small <= 0.0:
                    raise SpaceValidationError(
                        f"duplicate points: point {i} has a zero off-diagonal distance")
                mp = min(mp, small)
            self._min_positive = mp
        self._check_triangle(seed)

    def _check_triangle(self, seed: int) -> None:
        n = self.n
        if n < 3:
            return
        if n <= FULL_TRIANGLE_LIMIT:
            d = self.distance_matrix()
            for k in range(n):
                slack = d - (d[:, k][:, None] + d[k, :][None, :])
                if slack.max() > TRIANGLE_TOL:
                    i, j = np.unravel_index(np.argmax(slack), slack.shape)
                    raise SpaceValidationError(
                        f"triangle inequality violated on ({i}, {j}, {k}): "
                        f"d={d[i, j]:.6g} > {d[i, k] + d[k, j]:.6g}")
            return
        rng = np.random.default_rng(seed)
        triples = rng.integers(0, n, size=(10 * n, 3))
        for i, j, k in triples:
            dij = self.dist(int(i), int(j))
            via = self.dist(int(i), int(k)) + self.dist(int(k), int(j))
            if dij - via > TRIANGLE_TOL:
                raise SpaceValidationError(
                    f"triangle inequality violated on ({i}, {j}, {k})")

    # -- queries -----------------------------------------------------------

    @property
    def n(self) -> int:
        if self._coords is not None:
            return self._coords.shape[0]
        return self._matrix.shape[0]

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n)

    def coords(self) -> np.ndarray:
        """Embedded coordinates; matrix-backed spaces have none."""
        if self._coords is None:
            raise SpaceValidationError("space has no coordinate embedding")
        return self._coords.copy()

    @property
    def diameter(self) -> float:
        return 1.0 if self.n > 1 else 0.0

    @property
    def min_positive_distance(self) -> float | None:
        return self._min_positive

    def dist(self, i: int, j: int) -> float:
        if self._matrix is not None:
            return float(self._matrix[i, j])
        return float(np.linalg.norm(self._coords[i] - self._coords[j]))

    def dists_from(self, i: int) -> np.ndarray:
        """Distance row from point i to every point, shape (N,)."""
        if self._matrix is not None:
            return self._matrix[i]
        return np.linalg.norm(self._coords - self._coords[i], axis=1)

    def pair_dists(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        """Elementwise distances d(left[t], right[t])."""
        left = np.asarray(left)
        right = np.asarray(right)
        if self._matrix is not None:
            return self._matrix[left, right]
        return np.linalg.norm(self._coords[left] - self._coords[right], axis=1)

    def distance_matrix(self) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix
        if self.n > MAX_MATRIX_POINTS:
            raise SpaceValidationError(
                f"refusing to materialize a {self.n}x{self.n} distance matrix")
        diff = self._coords[:, None, :] - self._coords[None, :, :]
        return np.linalg.norm(diff, axis=2)

    def subset_diameter(self, ids: np.ndarray) -> float:
        """Diameter of a subset of point ids (max pairwise, chunked)."""
        ids = np.asarray(ids)
        if ids.size <= 1:
            return 0.0
        best = 0.0
        for i in ids:
            row = self.dists_from(int(i))
            best = max(best, float(row[ids].max()))
        return best

    def to_json(self) -> dict:
        if self._coords is not None:
            return {"label": self.label, "points": self._coords.tolist()}
        return {"label": self.label, "matrix": self._matrix.tolist()}


def load_space(source, seed: int = 0) -> FiniteMetricSpace:
    """Build a space from a JSON file, a parsed dict, or a generator spec.

    Accepted dict shapes: {"label", "points"} for an embedded cloud,
    {"label", "matrix"} for an explicit metric, or a generator spec with a
    "kind" key, which is forwarded to generators.generate.
    """
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            source = json.load(fh)
    if not isinstance(source, dict):
        raise SpaceValidationError(f"cannot load a space from {type(source).__name__}")
    if "space" in source and isinstance(source["space"], dict):
        source = source["space"]  # unwrap a CLI export document
    if "kind" in source:
        from .generators import GeneratorSpec, generate
        return generate(GeneratorSpec.from_dict(source))
    label = source.get("label", "space")
    if "points" in source:
        return FiniteMetricSpace(label, coords=np.asarray(source["points"], dtype=float),
                                 seed=seed)
    if "matrix" in source:
        return FiniteMetricSpace(label, matrix=np.asarray(source["matrix"], dtype=float),
                                 seed=seed)
    raise SpaceValidationError("space JSON needs a 'points', 'matrix' or 'kind' key")


# -- net hierarchies -------------------------------------------------------


@dataclass
class Covering:
    """Balls B(x, a**-level) over the level's net centers, as point-id sets."""
    level: int
    radius: float
    centers: np.ndarray
    balls: list  # list of np.ndarray of point ids, aligned with centers
    space: "FiniteMetricSpace" = None

    @property
    def size(self) -> int:
        return len(self.centers)


class NetHierarchy:
    """Greedy maximal a**-i separated nets for i = 0..depth.

    Each level is built independently by scanning point ids in ascending
    order and keeping any point at distance >= a**-i from everything kept
    so far. Requested depths below the finest resolvable scale are
    truncated with a warning rather than rejected.
    """

    def __init__(self, space: FiniteMetricSpace, base: float, levels: list,
                 requested_depth: int, truncated: bool):
        self.space = space
        self.base = float(base)
        self.levels = levels
        self.requested_depth = requested_depth
        self.truncated = truncated
        self._coverings: dict[int, Covering] = {}

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def radius(self, level: int) -> float:
        return self.base ** (-level)

    def covering(self, level: int) -> Covering:
        if level not in self._coverings:
            if not 0 <= level <= self.depth:
                raise ValueError(f"level {level} outside 0..{self.depth}")
            r = self.radius(level)
            centers = self.levels[level]
            balls = []
            for c in centers:
                row = self.space.dists_from(int(c))
                balls.append(np.flatnonzero(row <= r))
            self._coverings[level] = Covering(level, r, centers, balls, self.space)
        return self._coverings[level]

    def verify(self) -> None:
        """Assert separation and covering on every level."""
        for i, centers in enumerate(self.levels):
            r = self.radius(i)
            mind = np.full(self.space.n, np.inf)
            for c in centers:
                row = self.space.dists_from(int(c))
                if mind[c] < r * (1.0 - SEPARATION_TOL):
                    raise AssertionError(f"net level {i} violates {r}-separation")
                mind = np.minimum(mind, row)
            if centers.size and float(mind.max()) > r:
                raise AssertionError(f"net level {i} fails to cover at radius {r}")

    def summary(self) -> dict:
        return {
            "base": self.base,
            "depth": self.depth,
            "requested_depth": self.requested_depth,
            "truncated": self.truncated,
            "level_sizes": [int(lv.size) for lv in self.levels],
            "radii": [self.radius(i) for i in range(self.depth + 1)],
        }


def build_net_hierarchy(space: FiniteMetricSpace, a: float, depth: int) -> NetHierarchy:
    if a <= 1.0:
        raise ValueError(f"net base must exceed 1, got {a}")
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    requested = depth
    truncated = False
    dmin = space.min_positive_distance
    if dmin is not None and a ** (-depth) < dmin:
        useful = int(math.floor(math.log(1.0 / dmin) / math.log(a)))
        useful = max(useful, 0)
        if useful < depth:
            logger.warning(
                "depth %d reaches below the minimum pairwise distance %.3g; "
                "truncating to depth %d", depth, dmin, useful)
            depth = useful
            truncated = True
    levels = []
    n = space.n
    for i in range(depth + 1):
        r = a ** (-i)
        mind = np.full(n, np.inf)
        chosen = []
        for pid in range(n):
            if not chosen or mind[pid] >= r:
                chosen.append(pid)
                mind = np.minimum(mind, space.dists_from(pid))
        levels.append(np.asarray(chosen, dtype=int))
    return NetHierarchy(space, a, levels, requested, truncated)


# -- coarse geometry estimates ----------------------------------------------


def estimate_doubling_constant(space: FiniteMetricSpace, hierarchy: NetHierarchy) -> int:
    """Max number of next-level balls a greedy cover needs for any net ball.

    For every center x at level i, the points of B(x, a**-i) are covered
    greedily by balls of radius a**-(i+1) around level-(i+1) centers,
    always taking the center covering the most uncovered points (ties to
    the smaller id). The max count over all (x, i) is an upper-bound
    witness for the doubling behaviour at the hierarchy's scales.
    """
    best = 1
    for i in range(hierarchy.depth):
        r_in = hierarchy.radius(i)
        r_out = hierarchy.radius(i + 1)
        next_centers = hierarchy.levels[i + 1]
        for x in hierarchy.levels[i]:
            ball = np.flatnonzero(space.dists_from(int(x)) <= r_in)
            if ball.size == 0:
                continue
            cover_sets = []
            for y in next_centers:
                row = space.dists_from(int(y))
                hits = ball[row[ball] <= r_out]
                if hits.size:
                    cover_sets.append(set(hits.tolist()))
                else:
                    cover_sets.append(set())
            uncovered = set(ball.tolist())
            count = 0
            while uncovered:
                gains = [len(s & uncovered) for s in cover_sets]
                pick = int(np.argmax(gains))
                if gains[pick] == 0:
                    raise AssertionError(
                        f"covering invariant broken at level {i+1} around point {x}")
                uncovered -= cover_sets[pick]
                count += 1
            best = max(best, count)
    return best


@dataclass
class LinearConnectivityResult:
    """Worst observed detour ratio between sampled pairs, or a failure."""
    ok: bool
    ratio: float | None
    worst_pair: tuple | None
    failed_pair: tuple | None
    pairs_checked: int

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "ratio": self.ratio,
            "worst_pair": list(self.worst_pair) if self.worst_pair else None,
            "failed_pair": list(self.failed_pair) if self.failed_pair else None,
            "pairs_checked": self.pairs_checked,
        }


def estimate_linear_connectivity(space: FiniteMetricSpace, hierarchy: NetHierarchy,
                                 nerve_builder=None, pairs=None, max_pairs: int = 64,
                                 seed: int = 0) -> LinearConnectivityResult:
    """Bound the detour constant observed in the finest nerve.

    For sampled pairs (x, y) this finds the cheapest chain of finest-level
    balls joining them, measured by summed center-to-center distance plus
    the two endpoint legs. That chain length upper-bounds the diameter of
    a continuum joining x to y, so the reported max ratio (chain length
    over d(x, y)) witnesses linear connectivity. A disconnected pair is a
    failure verdict.
    """
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import dijkstra

    if nerve_builder is None:
        from .nerve import build_nerve
        nerve_builder = build_nerve
    cov = hierarchy.covering(hierarchy.depth)
    nerve = nerve_builder(cov)
    nv = nerve.n_vertices
    if pairs is None:
        n = space.n
        all_pairs = n * (n - 1) // 2
        if all_pairs <= max_pairs:
            pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        else:
            rng = np.random.default_rng(seed)
            pairs = []
            seen = set()
            while len(pairs) < max_pairs:
                i, j = rng.integers(0, n, size=2)
                if i == j:
                    continue
                key = (min(i, j), max(i, j))
                if key not in seen:
                    seen.add(key)
                    pairs.append((int(key[0]), int(key[1])))
    if not pairs:
        return LinearConnectivityResult(True, None, None, None, 0)

    if nerve.n_edges:
        rows = nerve.edges[:, 0]
        cols = nerve.edges[:, 1]
        weights = space.pair_dists(cov.centers[rows], cov.centers[cols])
    else:
        rows = cols = np.empty(0, dtype=int)
        weights = np.empty(0)
    center_ids = cov.centers
    graph = csr_matrix((weights, (rows, cols)), shape=(nv, nv))

    point_to_balls = nerve.point_to_vertices()
    worst = -1.0
    worst_pair = None
    for x, y in pairs:
        src = np.asarray(point_to_balls[int(x)], dtype=int)
        dst_arr = np.asarray(point_to_balls[int(y)], dtype=int)
        if src.size == 0 or dst_arr.size == 0:
            return LinearConnectivityResult(False, None, None, (x, y), len(pairs))
        dmat = dijkstra(graph, directed=False, indices=src)
        src_legs = space.pair_dists(np.full(src.size, x), center_ids[src])
        total = dmat + src_legs[:, None]
        dst_legs = space.pair_dists(np.full(dst_arr.size, y), center_ids[dst_arr])
        best = float((total[:, dst_arr] + dst_legs[None, :]).min())
        if not math.isfinite(best):
            return LinearConnectivityResult(False, None, None, (x, y), len(pairs))
        ratio = best / space.dist(int(x), int(y))
        if ratio > worst:
            worst = ratio
            worst_pair = (int(x), int(y))
    return LinearConnectivityResult(True, worst, worst_pair, None, len(pairs))
