"""Scale scans, critical-exponent estimation and sub-multiplicativity."""
import math

import numpy as np
import pytest

from confdim import (FiniteMetricSpace, build_net_hierarchy, build_nerve,
                     compute_modulus, estimate_pc, scan, submultiplicativity)
from confdim.critical import ScanResult
from confdim.nerve import annulus_family


def synth_scan(entries, p_grid, n_values, base=2.0):
    """Hand-built table for exercising the estimator in isolation."""
    return ScanResult(base=base, depth=max(n_values), p_grid=list(p_grid),
                      n_values=list(n_values), entries=dict(entries),
                      cell_values={}, samples={})


# -- scan structure ------------------------------------------------------------

def test_scan_entries_are_cell_maxima(circle64, circle64_hier):
    res = scan(circle64, circle64_hier, [1.0, 2.0], n_max=2, balls_per_scale=3)
    assert res.errors == []
    for (p, n), v in res.entries.items():
        cells = [val for (pp, nn, k), val in res.cell_values.items()
                 if pp == p and nn == n]
        assert v == pytest.approx(max(cells))


def test_scan_cell_reproducible_directly(circle64, circle64_hier):
    """A tabulated cell value equals a fresh stand-alone modulus solve."""
    res = scan(circle64, circle64_hier, [1.5], n_max=2, balls_per_scale=2,
               keep_per_ball=True)
    k, n, center, p, v = next(t for t in res.ball_values if t[0] >= 2)
    nerve = build_nerve(circle64_hier.covering(k + n))
    fam = annulus_family(circle64_hier, nerve, center, k)
    again = compute_modulus(fam, p, tol=1e-4)
    assert again.value == pytest.approx(v, rel=1e-3)


def test_scan_is_deterministic(circle64, circle64_hier):
    a = scan(circle64, circle64_hier, [1.0, 1.5], n_max=2, balls_per_scale=2)
    b = scan(circle64, circle64_hier, [1.0, 1.5], n_max=2, balls_per_scale=2)
    assert a.entries == b.entries
    assert a.cell_values == b.cell_values


def test_scan_workers_agree_with_serial(circle64, circle64_hier):
    a = scan(circle64, circle64_hier, [1.0, 2.0], n_max=2, balls_per_scale=2,
             workers=1)
    b = scan(circle64, circle64_hier, [1.0, 2.0], n_max=2, balls_per_scale=2,
             workers=3)
    assert a.entries == b.entries


def test_circle_p1_row_is_two(circle64, circle64_hier):
    """Any nonempty circle annulus is blocked by exactly two balls."""
    res = scan(circle64, circle64_hier, [1.0], n_max=3, balls_per_scale=4)
    rows = res.series(1.0)
    positive = [(n, v) for n, v in rows if v > 0]
    assert len(positive) >= 2
    for n, v in positive:
        assert v == pytest.approx(2.0, abs=1e-9)


def test_single_point_space_scans_to_zero():
    """A one-ball nerve has no curves anywhere, so every entry is zero."""
    space = FiniteMetricSpace.from_points([[0.0, 0.0]])
    h = build_net_hierarchy(space, 2.0, 2)
    res = scan(space, h, [1.0, 2.0], n_max=2)
    assert res.entries
    assert all(v == 0.0 for v in res.entries.values())


def test_scan_rejects_bad_arguments(circle64, circle64_hier):
    with pytest.raises(ValueError):
        scan(circle64, circle64_hier, [], n_max=2)
    with pytest.raises(ValueError):
        scan(circle64, circle64_hier, [0.5], n_max=2)
    with pytest.raises(ValueError):
        scan(circle64, circle64_hier, [1.5], n_max=0)


def test_scan_caps_n_at_depth(circle64, circle64_hier, caplog):
    import logging
    with caplog.at_level(logging.WARNING, logger="confdim.critical"):
        res = scan(circle64, circle64_hier, [1.0], n_max=40, balls_per_scale=1)
    assert max(res.n_values) == circle64_hier.depth
    assert any("capping" in rec.message for rec in caplog.records)


def test_scan_rows_echo_sample_counts(circle64, circle64_hier):
    res = scan(circle64, circle64_hier, [1.0], n_max=2, balls_per_scale=2)
    for p, n, k, v, count in res.table_rows():
        assert count == res.samples[(k, n)]
        assert count <= 2 or res.samples[(k, n)] == count


# -- estimator on synthetic tables ----------------------------------------------

def test_pc_bracket_midpoint():
    grid = [1.0, 1.5, 2.0]
    entries = {}
    for n in (1, 2, 3, 4):
        entries[(1.0, n)] = 2.0            # flat: subcritical
        entries[(1.5, n)] = 2.0 * 0.98 ** n  # barely drifting: subcritical
        entries[(2.0, n)] = 2.0 * 0.25 ** n  # geometric: supercritical
    est = estimate_pc(synth_scan(entries, grid, [1, 2, 3, 4]))
    assert est.kind == "bracket"
    assert est.bracket == (1.5, 2.0)
    assert est.value == pytest.approx(1.75)
    assert est.slopes[2.0]["classification"] == "supercritical"
    assert est.slopes[1.0]["classification"] == "subcritical"


def test_pc_all_flat_is_lower_bound():
    grid = [1.0, 2.0]
    entries = {(p, n): 3.0 for p in grid for n in (1, 2, 3)}
    est = estimate_pc(synth_scan(entries, grid, [1, 2, 3]))
    assert est.kind == "lower_bound"
    assert est.value == 2.0
    assert "lower bound" in est.note


def test_pc_decay_everywhere_is_degenerate():
    grid = [1.0, 2.0]
    entries = {(p, n): 0.5 ** n for p in grid for n in (1, 2, 3)}
    est = estimate_pc(synth_scan(entries, grid, [1, 2, 3]))
    assert est.kind == "degenerate"
    assert est.value == 1.0


def test_pc_trailing_zeros_mean_decay():
    grid = [1.0, 2.0]
    entries = {(1.0, 1): 2.0, (1.0, 2): 2.0, (1.0, 3): 2.0,
               (2.0, 1): 1.0, (2.0, 2): 0.0, (2.0, 3): 0.0}
    est = estimate_pc(synth_scan(entries, grid, [1, 2, 3]))
    assert est.kind == "bracket"
    assert est.slopes[2.0]["classification"] == "supercritical"


def test_pc_single_point_counts_as_subcritical():
    grid = [1.0]
    est = estimate_pc(synth_scan({(1.0, 1): 1.0}, grid, [1]))
    assert est.kind == "lower_bound"
    assert "single data point" in est.slopes[1.0].get("note", "")


def test_pc_non_monotone_noted():
    grid = [1.0, 1.5, 2.0]
    entries = {}
    for n in (1, 2, 3):
        entries[(1.0, n)] = 0.2 ** n   # decays
        entries[(1.5, n)] = 2.0        # flat again
        entries[(2.0, n)] = 0.2 ** n   # decays
    est = estimate_pc(synth_scan(entries, grid, [1, 2, 3]))
    assert "non-monotone" in est.note


def test_pc_threshold_validation():
    est_input = synth_scan({(1.0, 1): 1.0, (1.0, 2): 1.0}, [1.0], [1, 2])
    with pytest.raises(ValueError):
        estimate_pc(est_input, decay_threshold=0.0)


def test_pc_threshold_scales_with_base():
    entries = {(1.0, n): 1.0 for n in (1, 2)}
    est = estimate_pc(synth_scan(entries, [1.0], [1, 2], base=4.0))
    assert est.threshold == pytest.approx(0.05 * math.log(4.0))


# -- sub-multiplicativity ---------------------------------------------------------

def test_submult_exact_geometric_table():
    """M(n) = c * q^n satisfies the bound with K = 1/c exactly."""
    c, q = 2.0, 0.5
    entries = {(1.5, n): c * q ** n for n in (1, 2, 3, 4)}
    rep = submultiplicativity(synth_scan(entries, [1.5], [1, 2, 3, 4]), 1.5)
    assert rep.k_fit == pytest.approx(1.0 / c)
    assert rep.k_min == pytest.approx(1.0 / c)
    assert rep.stability_ratio == pytest.approx(1.0)
    assert rep.count == 4  # (1,1) (1,2) (1,3) (2,2)


def test_submult_uses_worst_pair():
    entries = {(2.0, 1): 1.0, (2.0, 2): 4.0, (2.0, 3): 1.0, (2.0, 4): 1.0}
    rep = submultiplicativity(synth_scan(entries, [2.0], [1, 2, 3, 4]), 2.0)
    # pair (1,1): K = 4; pairs (1,2): 0.25, (1,3): 0.25, (2,2): 1/16
    assert rep.k_fit == pytest.approx(4.0)
    assert rep.k_min == pytest.approx(1.0 / 16.0)


def test_submult_requires_pairs():
    with pytest.raises(ValueError):
        submultiplicativity(synth_scan({(1.5, 1): 1.0}, [1.5], [1]), 1.5)


def test_submult_ignores_zero_entries():
    entries = {(1.5, 1): 1.0, (1.5, 2): 0.0, (1.5, 3): 1.0, (1.5, 4): 1.0}
    rep = submultiplicativity(synth_scan(entries, [1.5], [1, 2, 3, 4]), 1.5)
    # only (1,3) has all three entries positive
    assert rep.count == 1


def test_submult_unknown_exponent_rejected():
    with pytest.raises(ValueError):
        submultiplicativity(synth_scan({(1.5, 1): 1.0}, [1.5], [1]), 3.0)
