"""Reference space generators: curves, grids and IFS vertex sets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .space import FiniteMetricSpace

MAX_POINTS = 200_000
DEDUP_TOL = 1e-9

KINDS = (
    "interval",
    "circle",
    "square_grid",
    "sierpinski_gasket",
    "sierpinski_carpet",
    "snowflake_interval",
    "ifs_custom",
)


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    """Generator kind, resolution (count, side or depth), extra parameters."""
    kind: str
    resolution: int
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        kind = d.get("kind")
        if kind not in KINDS:
            raise GeneratorError(f"unknown generator kind {kind!r}; choose from {KINDS}")
        if "resolution" not in d:
            raise GeneratorError("generator spec needs a 'resolution'")
        params = {k: v for k, v in d.items() if k not in ("kind", "resolution")}
        return cls(kind, int(d["resolution"]), params)


def _check_size(count: int, what: str) -> None:
    if count > MAX_POINTS:
        raise GeneratorError(
            f"{what} would produce {count} points, over the {MAX_POINTS} limit")


def _dedup(points: list) -> np.ndarray:
    """Keep the first representative of each 1e-9-rounded coordinate key."""
    seen = {}
    for p in points:
        key = tuple(round(c / DEDUP_TOL) for c in p)
        if key not in seen:
            seen[key] = p
    return np.asarray(list(seen.values()), dtype=float)


def _iterate_ifs(maps: list, seeds: np.ndarray, depth: int, label: str) -> np.ndarray:
    pts = seeds
    for _ in range(depth):
        _check_size(len(pts) * len(maps), label)
        out = []
        for lin, off in maps:
            out.extend((pts @ lin.T) + off)
        pts = _dedup(out)
        _check_size(len(pts), label)
    return pts


def _similarity(scale: float, rotation_deg: float = 0.0) -> np.ndarray:
    t = math.radians(rotation_deg)
    return scale * np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


def generate(spec: GeneratorSpec) -> FiniteMetricSpace:
    if spec.kind not in KINDS:
        raise GeneratorError(f"unknown generator kind {spec.kind!r}")
    if spec.resolution < 1:
        raise GeneratorError("resolution must be positive")
    return _BUILDERS[spec.kind](spec)


def _interval(spec: GeneratorSpec) -> FiniteMetricSpace:
    n = spec.resolution
    _check_size(n, "interval")
    if n == 1:
        pts = np.array([[0.0]])
    else:
        pts = np.linspace(0.0, 1.0, n)[:, None]
    return FiniteMetricSpace(f"interval-{n}", coords=pts)


def _circle(spec: GeneratorSpec) -> FiniteMetricSpace:
    n = spec.resolution
    _check_size(n, "circle")
    if n < 3:
        raise GeneratorError("circle needs at least 3 points")
    ang = 2.0 * math.pi * np.arange(n) / n
    pts = np.column_stack([np.cos(ang), np.sin(ang)])
    return FiniteMetricSpace(f"circle-{n}", coords=pts)


def _square_grid(spec: GeneratorSpec) -> FiniteMetricSpace:
    m = spec.resolution
    _check_size(m * m, "square_grid")
    if m == 1:
        pts = np.array([[0.0, 0.0]])
    else:
        side = np.linspace(0.0, 1.0, m)
        xx, yy = np.meshgrid(side, side, indexing="ij")
        pts = np.column_stack([xx.ravel(), yy.ravel()])
    return FiniteMetricSpace(f"grid-{m}x{m}", coords=pts)


def _gasket(spec: GeneratorSpec) -> FiniteMetricSpace:
    depth = spec.resolution
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])
    maps = [(_similarity(0.5), 0.5 * c) for c in corners]
    pts = _iterate_ifs(maps, corners, depth, "sierpinski_gasket")
    return FiniteMetricSpace(f"gasket-{depth}", coords=pts)


def _carpet(spec: GeneratorSpec) -> FiniteMetricSpace:
    depth = spec.resolution
    cells = [(i, j) for i in range(3) for j in range(3) if (i, j) != (1, 1)]
    maps = [(_similarity(1.0 / 3.0), np.array([i / 3.0, j / 3.0])) for i, j in cells]
    seeds = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    pts = _iterate_ifs(maps, seeds, depth, "sierpinski_carpet")
    return FiniteMetricSpace(f"carpet-{depth}", coords=pts)


def _snowflake(spec: GeneratorSpec) -> FiniteMetricSpace:
    n = spec.resolution
    _check_size(n, "snowflake_interval")
    eps = float(spec.params.get("epsilon", 0.5))
    if not 0.0 < eps < 1.0:
        raise GeneratorError(f"snowflake epsilon must lie in (0, 1), got {eps}")
    if n < 2:
        raise GeneratorError("snowflake_interval needs at least 2 points")
    t = np.linspace(0.0, 1.0, n)
    matrix = np.abs(t[:, None] - t[None, :]) ** eps
    np.fill_diagonal(matrix, 0.0)
    return FiniteMetricSpace(f"snowflake-{n}-eps{eps:g}", matrix=matrix)


def _ifs_custom(spec: GeneratorSpec) -> FiniteMetricSpace:
    depth = spec.resolution
    raw = spec.params.get("maps")
    if not raw:
        raise GeneratorError("ifs_custom needs a nonempty 'maps' list")
    maps = []
    for m in raw:
        scale = float(m.get("scale", 0.5))
        if not 0.0 < abs(scale) < 1.0:
            raise GeneratorError(f"ifs map scale must be contractive, got {scale}")
        lin = _similarity(scale, float(m.get("rotation_deg", 0.0)))
        off = np.asarray(m.get("offset", [0.0, 0.0]), dtype=float)
        if off.shape != (2,):
            raise GeneratorError("ifs map offset must be a 2-vector")
        maps.append((lin, off))
    if "seeds" in spec.params:
        seeds = np.asarray(spec.params["seeds"], dtype=float)
        if seeds.ndim != 2 or seeds.shape[1] != 2:
            raise GeneratorError("ifs seeds must be a list of 2-vectors")
    else:
        # fixed point of x -> Ax + b is (I - A)^-1 b
        seeds = np.array([np.linalg.solve(np.eye(2) - lin, off) for lin, off in maps])
    pts = _iterate_ifs(maps, _dedup(list(seeds)), depth, "ifs_custom")
    return FiniteMetricSpace(f"ifs-{depth}", coords=pts)


_BUILDERS = {
    "interval": _interval,
    "circle": _circle,
    "square_grid": _square_grid,
    "sierpinski_gasket": _gasket,
    "sierpinski_carpet": _carpet,
    "snowflake_interval": _snowflake,
    "ifs_custom": _ifs_custom,
}
