"""Multiscale modulus tables and the critical exponent extracted from them.

For a ball B at net level k and an offset n, the annulus family around B
is measured on the nerve of the level k+n covering. The scan tabulates
M(p, n) = max over sampled balls of that modulus; the critical exponent
estimate looks for the p where the per-level decay rate of M(p, n) in n
turns from flat to geometric.
"""
from __future__ import annotations

import logging
import math
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .modulus import ModulusError, compute_moduli
from .nerve import annulus_family, build_nerve

logger = logging.getLogger(__name__)

DECAY_BASE_FACTOR = 0.05   # threshold = factor * log(base), per unit of n
POSITIVE_FLOOR = 1e-300


@dataclass
class ScanResult:
    base: float
    depth: int
    p_grid: list
    n_values: list
    entries: dict            # (p, n) -> max modulus over all sampled balls
    cell_values: dict        # (p, n, k) -> max modulus within one level
    samples: dict            # (k, n) -> number of balls sampled
    ball_values: list = field(default_factory=list)   # (k, n, center, p, value)
    errors: list = field(default_factory=list)

    def series(self, p: float) -> list:
        """[(n, M(p, n))] for the given exponent, ascending in n."""
        pk = _match_p(self.p_grid, p)
        return [(n, self.entries[(pk, n)]) for n in self.n_values
                if (pk, n) in self.entries]

    def table_rows(self) -> list:
        """Rows (p, n, k, value, balls_sampled) sorted for stable output."""
        rows = []
        for (p, n, k), v in self.cell_values.items():
            rows.append((p, n, k, v, self.samples.get((k, n), 0)))
        rows.sort(key=lambda r: (r[0], r[1], r[2]))
        return rows

    def to_json(self) -> dict:
        return {
            "base": self.base,
            "depth": self.depth,
            "p_grid": list(self.p_grid),
            "n_values": list(self.n_values),
            "entries": [{"p": p, "n": n, "value": v}
                        for (p, n), v in sorted(self.entries.items())],
            "cells": [{"p": p, "n": n, "k": k, "value": v, "balls": s}
                      for p, n, k, v, s in self.table_rows()],
            "errors": list(self.errors),
        }


_FORK_STATE: dict = {}


def _scan_cell(task) -> tuple:
    """One (k, n) cell: moduli of every sampled ball on the level k+n nerve."""
    k, n, centers = task
    state = _FORK_STATE
    hierarchy = state["hierarchy"]
    p_grid = state["p_grid"]
    tol = state["tol"]
    iteration_cap = state["iteration_cap"]
    cache = state.setdefault("nerves", {})
    level = k + n
    if level not in cache:
        cache[level] = build_nerve(hierarchy.covering(level))
    nerve = cache[level]
    out = []
    for c in centers:
        family = annulus_family(hierarchy, nerve, int(c), k)
        try:
            res = compute_moduli(family, p_grid, tol=tol,
                                 iteration_cap=iteration_cap)
            out.append((int(c), {p: r.value for p, r in res.items()}, None))
        except ModulusError as exc:
            out.append((int(c), None, f"k={k} n={n} center={c}: {exc}"))
    return k, n, out


def scan(space, hierarchy, p_grid, n_max: int, balls_per_scale: int = 0,
         tol: float = 1e-4, workers: int = 1, keep_per_ball: bool = False,
         iteration_cap: int = 1_000_000) -> ScanResult:
    """Tabulate annulus moduli over all levels and offsets n = 1..n_max.

    balls_per_scale limits each (k, n) cell to the first that many centers
    in id order; zero means every center. Workers > 1 forks the cell loop.
    """
    p_grid = sorted(set(float(p) for p in p_grid))
    if not p_grid:
        raise ValueError("p_grid must be nonempty")
    if min(p_grid) < 1.0:
        raise ValueError("p_grid values must be at least 1")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    depth = hierarchy.depth
    n_values = [n for n in range(1, n_max + 1) if n <= depth]
    if not n_values:
        raise ValueError(f"no scales available: depth {depth} leaves no (k, n) cells")
    if n_max > depth:
        logger.warning("n_max %d exceeds hierarchy depth %d; capping", n_max, depth)

    tasks = []
    samples = {}
    for n in n_values:
        for k in range(0, depth - n + 1):
            centers = hierarchy.levels[k]
            if balls_per_scale and balls_per_scale < centers.size:
                centers = centers[:balls_per_scale]
            tasks.append((k, n, tuple(int(c) for c in centers)))
            samples[(k, n)] = len(centers)

    _FORK_STATE.clear()
    _FORK_STATE.update({"hierarchy": hierarchy, "p_grid": p_grid, "tol": tol,
                        "iteration_cap": iteration_cap})
    if workers > 1 and hasattr(os, "fork"):
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
            cell_results = list(ex.map(_scan_cell, tasks))
    else:
        cell_results = [_scan_cell(t) for t in tasks]

    entries: dict = {}
    cell_values: dict = {}
    ball_values: list = []
    errors: list = []
    for k, n, rows in sorted(cell_results, key=lambda t: (t[0], t[1])):
        for center, values, err in rows:
            if err is not None:
                errors.append(err)
                logger.warning("modulus failure: %s", err)
                continue
            for p, v in values.items():
                key_cell = (p, n, k)
                cell_values[key_cell] = max(cell_values.get(key_cell, 0.0), v)
                key = (p, n)
                entries[key] = max(entries.get(key, 0.0), v)
                if keep_per_ball:
                    ball_values.append((k, n, center, p, v))
    return ScanResult(hierarchy.base, depth, p_grid, n_values, entries,
                      cell_values, samples, ball_values, errors)


def _match_p(grid, p: float) -> float:
    for g in grid:
        if abs(g - p) < 1e-9:
            return g
    raise ValueError(f"exponent {p} not in scan grid {grid}")


@dataclass
class PcEstimate:
    value: float
    kind: str                 # "bracket" | "degenerate" | "lower_bound"
    bracket: tuple | None
    slopes: dict              # p -> {slope, points, classification, rms}
    threshold: float
    note: str

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "kind": self.kind,
            "bracket": list(self.bracket) if self.bracket else None,
            "threshold": self.threshold,
            "note": self.note,
            "slopes": [{"p": p, **info} for p, info in sorted(self.slopes.items())],
        }


def _fit_slope(series: list, threshold: float) -> dict:
    """Decay classification of one M(p, n) series.

    Fits log M against n by least squares over the strictly positive
    entries. Zero entries after a positive one mean the modulus fell
    below the floor, which is already geometric decay.
    """
    ns = np.array([n for n, _ in series], dtype=float)
    vs = np.array([v for _, v in series], dtype=float)
    pos = vs > POSITIVE_FLOOR
    info: dict = {"points": int(pos.sum()), "rms": 0.0}
    if not pos.any():
        info.update(slope=-math.inf, classification="supercritical",
                    note="all entries zero")
        return info
    trailing_zero = bool((~pos)[np.argmax(pos):].any())
    if pos.sum() >= 2:
        x = ns[pos]
        y = np.log(vs[pos])
        A = np.vstack([x, np.ones_like(x)]).T
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        slope = float(coef[0])
        info["rms"] = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    else:
        slope = -math.inf if trailing_zero else 0.0
    if trailing_zero:
        info.update(slope=slope, classification="supercritical",
                    note="entries reach zero")
    elif pos.sum() == 1:
        info.update(slope=slope, classification="subcritical",
                    note="single data point, treated as non-decaying")
    else:
        cls = "supercritical" if slope <= -threshold else "subcritical"
        info.update(slope=slope, classification=cls)
    return info


def estimate_pc(scan_result: ScanResult, decay_threshold: float | None = None) -> PcEstimate:
    """Critical exponent from the subcritical-to-supercritical transition.

    An exponent is supercritical when its fitted decay rate per level is
    at most -threshold (default 0.05 * log(base), a twentieth of one
    level's scale factor). The estimate is the midpoint of the first
    transition bracket on the grid.
    """
    thr = decay_threshold if decay_threshold is not None else DECAY_BASE_FACTOR * math.log(scan_result.base)
    if thr <= 0:
        raise ValueError("decay threshold must be positive")
    grid = list(scan_result.p_grid)
    slopes = {}
    classes = []
    for p in grid:
        info = _fit_slope(scan_result.series(p), thr)
        slopes[p] = info
        classes.append(info["classification"])
    note_parts = []
    first_super = next((i for i, c in enumerate(classes) if c == "supercritical"), None)
    if any(classes[i] == "subcritical" and classes[i - 1] == "supercritical"
           for i in range(1, len(classes))):
        note_parts.append("non-monotone classification; first transition used")
    if first_super is None:
        note_parts.append("no supercritical exponent on the grid; estimate is a lower bound")
        return PcEstimate(max(grid), "lower_bound", None, slopes, thr, "; ".join(note_parts))
    if first_super == 0:
        note_parts.append("supercritical already at the grid minimum; bracket degenerate")
        return PcEstimate(grid[0], "degenerate", (grid[0], grid[0]), slopes, thr,
                          "; ".join(note_parts))
    lo, hi = grid[first_super - 1], grid[first_super]
    return PcEstimate(0.5 * (lo + hi), "bracket", (lo, hi), slopes, thr,
                      "; ".join(note_parts))


@dataclass
class SubmultReport:
    p: float
    pairs: dict               # (n, m) -> ratio M(n+m) / (M(n) * M(m))
    k_fit: float              # smallest constant satisfying every pair
    k_min: float
    stability_ratio: float
    count: int

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "k_fit": self.k_fit,
            "k_min": self.k_min,
            "stability_ratio": self.stability_ratio,
            "count": self.count,
            "pairs": [{"n": n, "m": m, "ratio": r}
                      for (n, m), r in sorted(self.pairs.items())],
        }


def submultiplicativity(scan_result: ScanResult, p: float) -> SubmultReport:
    """Ratios M(n+m) / (M(n) M(m)) over all in-table offset pairs.

    The max ratio is the smallest constant K making the table
    submultiplicative; its spread against the min indicates stability.
    """
    pk = _match_p(scan_result.p_grid, p)
    table = {n: v for n, v in scan_result.series(pk) if v > POSITIVE_FLOOR}
    pairs = {}
    for n in sorted(table):
        for m in sorted(table):
            if m < n:
                continue
            if (n + m) in table:
                pairs[(n, m)] = table[n + m] / (table[n] * table[m])
    if not pairs:
        raise ValueError(f"no composable (n, m) pairs at p={pk} with positive entries")
    vals = list(pairs.values())
    k_fit = max(vals)
    k_min = min(vals)
    return SubmultReport(pk, pairs, k_fit, k_min,
                         k_fit / k_min if k_min > 0 else math.inf, len(pairs))
