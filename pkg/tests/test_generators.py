"""Point-cloud generators against integer-arithmetic reference counts.

The fractal generators are checked point-for-point against digit
expansions done in exact integers, so any drift in the float pipeline
(map composition, dedup rounding) shows up as a set mismatch.
"""
import math

import numpy as np
import pytest

from confdim import GeneratorError, GeneratorSpec, generate


def gasket_lattice(depth: int) -> set:
    """Exact gasket vertices in the triangular-lattice basis.

    Basis e1 = (1, 0), e2 = (1/2, sqrt(3)/2). Every depth-k point is
    (seed + sum 2^(t-1) * digit_t) / 2^k with digits in the three corner
    vectors, so the numerators enumerate exactly.
    """
    corners = [(0, 0), (1, 0), (0, 1)]
    pts = {(u, v) for u, v in corners}
    for _ in range(depth):
        nxt = set()
        for u, v in pts:
            for cu, cv in corners:
                nxt.add((u + cu, v + cv))
        # one refinement halves the cell, i.e. doubles the denominator;
        # keeping numerators means doubling the corner offsets instead
        corners = [(2 * cu, 2 * cv) for cu, cv in corners]
        pts = nxt
    return pts


def carpet_lattice(depth: int) -> set:
    """Exact carpet cell corners over denominator 3^depth."""
    cells = {(0, 0)}
    for _ in range(depth):
        cells = {(3 * i + di, 3 * j + dj)
                 for i, j in cells
                 for di in range(3) for dj in range(3)
                 if (di, dj) != (1, 1)}
    side = 3 ** depth
    corners = set()
    for i, j in cells:
        for di in (0, 1):
            for dj in (0, 1):
                corners.add((i + di, j + dj))
    assert all(0 <= u <= side and 0 <= v <= side for u, v in corners)
    return corners


@pytest.mark.parametrize("depth", [1, 2, 3, 4])
def test_gasket_matches_lattice_oracle(depth):
    space = generate(GeneratorSpec("sierpinski_gasket", depth, {}))
    expected = gasket_lattice(depth)
    assert space.n == len(expected)
    # closed form for the same count
    assert space.n == 3 * (3 ** depth + 1) // 2
    # recover basis coordinates from the normalized embedding; the raw
    # cloud has diameter 1 already, so normalization is the identity
    coords = space.coords()
    scale = 2 ** depth
    v = coords[:, 1] * 2.0 / math.sqrt(3.0)
    u = coords[:, 0] - 0.5 * v
    got = {(round(float(a) * scale), round(float(b) * scale))
           for a, b in zip(u, v)}
    assert got == expected


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_carpet_matches_lattice_oracle(depth):
    space = generate(GeneratorSpec("sierpinski_carpet", depth, {}))
    expected = carpet_lattice(depth)
    assert space.n == len(expected)
    side = 3 ** depth
    diam = math.sqrt(2.0)  # unit square, before diameter normalization
    coords = space.coords() * diam
    got = {(round(float(x) * side), round(float(y) * side)) for x, y in coords}
    assert got == expected


def test_carpet_depth3_count_frozen():
    assert generate(GeneratorSpec("sierpinski_carpet", 3, {})).n == 688


def test_interval_spacing():
    space = generate(GeneratorSpec("interval", 9, {}))
    assert space.n == 9
    d = space.dists_from(0)
    assert np.allclose(sorted(d), np.linspace(0.0, 1.0, 9))


def test_circle_chord_distances():
    n = 12
    space = generate(GeneratorSpec("circle", n, {}))
    assert space.n == n
    d = space.dists_from(0)
    # chord length between points k steps apart, over the diameter 2
    expect = np.sin(np.pi * np.minimum(np.arange(n), n - np.arange(n)) / n)
    assert np.allclose(np.sort(d), np.sort(expect), atol=1e-12)


def test_grid_count_and_diameter():
    space = generate(GeneratorSpec("square_grid", 7, {}))
    assert space.n == 49
    assert abs(space.diameter - 1.0) < 1e-12


def test_snowflake_distance_law():
    eps = 0.7
    space = generate(GeneratorSpec("snowflake_interval", 17, {"epsilon": eps}))
    d = space.dists_from(0)
    t = np.linspace(0.0, 1.0, 17)
    assert np.allclose(np.sort(d), np.sort(t ** eps), atol=1e-12)


def test_snowflake_rejects_bad_exponent():
    with pytest.raises(GeneratorError):
        generate(GeneratorSpec("snowflake_interval", 8, {"epsilon": 1.5}))


def test_ifs_custom_cantor_count():
    maps = [{"scale": 1.0 / 3.0, "offset": [0.0, 0.0]},
            {"scale": 1.0 / 3.0, "offset": [2.0 / 3.0, 0.0]}]
    space = generate(GeneratorSpec("ifs_custom", 4, {"maps": maps}))
    # the two fixed points collapse into endpoint orbits: 2^depth cells,
    # each contributing its two endpoints, shared points deduplicated
    assert space.n == 2 ** 4 + 2 ** 4  # no shared endpoints on a Cantor set


def test_ifs_custom_needs_maps():
    with pytest.raises(GeneratorError):
        generate(GeneratorSpec("ifs_custom", 3, {}))


def test_unknown_kind_rejected():
    with pytest.raises(GeneratorError):
        GeneratorSpec.from_dict({"kind": "moebius", "resolution": 3})


def test_point_budget_enforced():
    with pytest.raises(GeneratorError):
        generate(GeneratorSpec("square_grid", 2000, {}))


def test_generation_is_deterministic():
    a = generate(GeneratorSpec("sierpinski_gasket", 3, {}))
    b = generate(GeneratorSpec("sierpinski_gasket", 3, {}))
    assert a.n == b.n
    assert np.array_equal(a.coords(), b.coords())
