"""Local cut structure: separator probes, spread checks, weight certificates.

A probe at (x, r) asks for the smallest set of fine balls, centered inside
the closed ball B(x, r), whose removal disconnects everything meeting
B(x, r/2) from everything reaching beyond B(x, r) in the finest nerve.
The centers of those balls are the local cut points this module tracks;
the certificate builder turns dyadic layers of such separators around a
point into an explicitly admissible weight of small mass.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import flows
from .modulus import WeightFunction, vol_p
from .nerve import NerveGraph, build_nerve, point_family

logger = logging.getLogger(__name__)

EXACT_DIAMETER_LIMIT = 2048
BOUNDARY_EPS = 1e-12


def _bit_reversed_ranks(count: int) -> list:
    """0..count-1 reordered so every prefix is spread across the range."""
    if count <= 0:
        return []
    bits = max(1, (count - 1).bit_length())
    keyed = sorted((int(format(i, f"0{bits}b")[::-1], 2), i) for i in range(count))
    return [i for _, i in keyed]


@dataclass(frozen=True)
class ProbePlan:
    """Which (center, level) pairs to probe, coarse levels first.

    levels None means every level from 1 to depth - 3 (at least level 1),
    a margin that keeps probe balls several times wider than the fine
    balls; per_level 0 takes every center of a level. Within a level,
    centers follow a bit-reversed rank order, so any prefix (a budget
    cutoff or a per_level cap) samples the whole id range instead of one
    corner of it. Explicit pairs override everything.
    """
    levels: tuple | None = None
    per_level: int = 8
    pairs: tuple | None = None

    def expand(self, hierarchy) -> list:
        if self.pairs is not None:
            out = []
            for center, level in self.pairs:
                if not 0 <= level <= hierarchy.depth:
                    raise ValueError(f"probe level {level} outside hierarchy")
                out.append((int(center), int(level)))
            return out
        depth = hierarchy.depth
        if self.levels is not None:
            levels = [l for l in self.levels if 0 <= l <= depth]
        else:
            levels = [l for l in range(1, max(1, depth - 3) + 1) if l <= depth]
        out = []
        for level in levels:
            centers = hierarchy.levels[level]
            order = _bit_reversed_ranks(centers.size)
            if self.per_level and self.per_level < centers.size:
                order = order[:self.per_level]
            out.extend((int(centers[i]), level) for i in order)
        return out


# -- generic probe machinery --------------------------------------------------


@dataclass
class ProbeResult:
    center: int
    level: int
    radius: float
    status: str                      # "ok" | "trivial" | "degenerate"
    cut_vertices: list
    cut_points: list
    verified: bool
    component_diameters: list
    note: str = ""

    @property
    def cut_size(self) -> int:
        return len(self.cut_points)

    def to_json(self) -> dict:
        return {
            "center": self.center,
            "level": self.level,
            "radius": self.radius,
            "status": self.status,
            "cut_size": self.cut_size,
            "cut_points": [int(p) for p in self.cut_points],
            "verified": self.verified,
            "component_diameters": [float(v) for v in self.component_diameters],
            "note": self.note,
        }


def _cut_in_subgraph(nerve: NerveGraph, local: np.ndarray, src: np.ndarray,
                     snk: np.ndarray, allowed: np.ndarray, lex: bool):
    """Min vertex cut computed on the induced subgraph, ids mapped back."""
    idx = np.flatnonzero(local)
    gmap = np.full(nerve.n_vertices, -1, dtype=int)
    gmap[idx] = np.arange(idx.size)
    nb_local = []
    for v in idx:
        mapped = gmap[nerve.neighbors[v]]
        nb_local.append(mapped[mapped >= 0])
    res = flows.min_vertex_cut(
        idx.size, nb_local,
        gmap[src][gmap[src] >= 0], gmap[snk][gmap[snk] >= 0],
        gmap[allowed][gmap[allowed] >= 0], lex=lex)
    cut_global = [int(idx[v]) for v in res.vertices]
    return res.finite, cut_global


def _separation_probe(nerve: NerveGraph, d: np.ndarray, inner_r: float,
                      outer_r: float, allowed_r: float, lex: bool = True):
    """Cut separating balls meeting B(., inner_r) from balls past outer_r.

    Only balls centered within allowed_r may be cut. The network is
    truncated to balls centered within outer_r plus one fine radius: any
    escaping curve meets a sink ball by then, so the cut is unchanged.
    Returns (status, cut_vertices).
    """
    minb, maxb = nerve.ball_stats(d)
    src = np.flatnonzero(minb <= inner_r)
    snk = np.flatnonzero(maxb > outer_r)
    if src.size == 0:
        return "trivial", []
    if snk.size == 0:
        return "trivial", []
    if np.intersect1d(src, snk).size:
        return "degenerate", []
    dc = d[nerve.centers]
    local = dc <= outer_r + nerve.covering.radius + BOUNDARY_EPS
    allowed = np.flatnonzero(local & (dc <= allowed_r + BOUNDARY_EPS))
    finite, cut = _cut_in_subgraph(nerve, local, src, snk, allowed, lex)
    if not finite:
        return "degenerate", []
    return "ok", cut


def _verify_separation(nerve: NerveGraph, removed: set, src: np.ndarray,
                       snk: np.ndarray) -> bool:
    """No surviving source ball reaches a sink ball in the full nerve."""
    snk_set = set(int(v) for v in snk) - removed
    seen = set()
    q = deque(int(v) for v in src if int(v) not in removed)
    seen.update(q)
    while q:
        u = q.popleft()
        if u in snk_set:
            return False
        for w in nerve.neighbors[u]:
            w = int(w)
            if w not in seen and w not in removed:
                seen.add(w)
                q.append(w)
    return True


def _components_without(nerve: NerveGraph, removed: set) -> list:
    comps = []
    seen = set(removed)
    for start in range(nerve.n_vertices):
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        q = deque([start])
        while q:
            u = q.popleft()
            for w in nerve.neighbors[u]:
                w = int(w)
                if w not in seen:
                    seen.add(w)
                    comp.append(w)
                    q.append(w)
        comps.append(np.asarray(sorted(comp), dtype=int))
    return comps


def _component_points(nerve: NerveGraph, comp: np.ndarray) -> np.ndarray:
    return np.unique(np.concatenate([nerve.balls[int(v)] for v in comp]))


def _points_diameter(space, pts: np.ndarray) -> float:
    """Exact for small sets, three-sweep farthest-point estimate for large.

    The sweep value never exceeds the true diameter, so thresholds of the
    form diameter >= bound stay sound on large components.
    """
    if pts.size <= 1:
        return 0.0
    if pts.size <= EXACT_DIAMETER_LIMIT:
        return space.subset_diameter(pts)
    a = int(pts[0])
    best = 0.0
    for _ in range(3):
        row = space.dists_from(a)[pts]
        j = int(np.argmax(row))
        best = max(best, float(row[j]))
        a = int(pts[j])
    return best


def _component_diameters(space, nerve: NerveGraph, removed: set, cap: int = 8) -> list:
    comps = _components_without(nerve, removed)
    diams = sorted((_points_diameter(space, _component_points(nerve, c)) for c in comps),
                   reverse=True)
    return [float(v) for v in diams[:cap]]


def _run_probe(space, hierarchy, nerve: NerveGraph, center: int, level: int,
               with_diameters: bool = True) -> ProbeResult:
    r = hierarchy.radius(level)
    d = space.dists_from(int(center))
    status, cut = _separation_probe(nerve, d, r / 2.0, r, r, lex=True)
    if status == "degenerate":
        return ProbeResult(center, level, r, status, [], [], False, [],
                           "no separating cut at this resolution")
    cut_points = [int(nerve.centers[v]) for v in cut]
    verified = True
    diams: list = []
    if status == "ok":
        minb, maxb = nerve.ball_stats(d)
        src = np.flatnonzero(minb <= r / 2.0)
        snk = np.flatnonzero(maxb > r)
        verified = _verify_separation(nerve, set(cut), src, snk)
        if not verified:
            logger.error("probe at center %d level %d failed verification", center, level)
        if with_diameters:
            diams = _component_diameters(space, nerve, set(cut))
    return ProbeResult(center, level, r, status, list(cut), cut_points,
                       verified, diams)


# -- uniformly well spread check ----------------------------------------------


@dataclass
class UwsReport:
    passes: bool
    c_max: int
    c_observed: int | None
    probes: list
    counts: dict
    note: str = ""

    def to_json(self) -> dict:
        return {
            "passes": self.passes,
            "c_max": self.c_max,
            "c_observed": self.c_observed,
            "counts": dict(self.counts),
            "note": self.note,
            "probes": [p.to_json() for p in self.probes],
        }


def check_uws(space, hierarchy, c_max: int, probes: ProbePlan | None = None) -> UwsReport:
    """Probe ball separators everywhere and compare sizes against c_max.

    Every probed (x, r) must admit a verified cut of at most c_max balls
    centered in B(x, r). Degenerate probes (resolution too coarse to
    separate) carry no evidence and are excluded from the maximum; the
    check fails when nothing valid remains.
    """
    if c_max < 1:
        raise ValueError("c_max must be at least 1")
    plan = probes or ProbePlan()
    probes = plan.expand(hierarchy)
    nerve = build_nerve(hierarchy.covering(hierarchy.depth))
    records = []
    counts = {"ok": 0, "trivial": 0, "degenerate": 0}
    observed = None
    for center, level in probes:
        rec = _run_probe(space, hierarchy, nerve, center, level)
        records.append(rec)
        counts[rec.status] += 1
        if rec.status in ("ok", "trivial") and rec.verified:
            observed = rec.cut_size if observed is None else max(observed, rec.cut_size)
    note = ""
    if observed is None:
        note = "no valid probes; nothing to certify"
        return UwsReport(False, c_max, None, records, counts, note)
    unverified = sum(1 for r in records if r.status == "ok" and not r.verified)
    passes = observed <= c_max and unverified == 0
    if unverified:
        note = f"{unverified} probe cut(s) failed separation verification"
    return UwsReport(passes, c_max, observed, records, counts, note)


# -- well spread (budgeted) check ---------------------------------------------


@dataclass
class WsReport:
    budgets: list
    sizes: list
    deltas: list
    point_sets: list
    probes_consumed: list
    decreasing: bool
    probe_records: list
    note: str = ""

    def to_json(self) -> dict:
        return {
            "budgets": list(self.budgets),
            "sizes": list(self.sizes),
            "deltas": [float(v) for v in self.deltas],
            "point_sets": [[int(p) for p in ps] for ps in self.point_sets],
            "probes_consumed": list(self.probes_consumed),
            "decreasing": self.decreasing,
            "note": self.note,
        }


def check_ws(space, hierarchy, budgets, probes: ProbePlan | None = None) -> WsReport:
    """Largest component diameter left by budgeted families of cut points.

    Probe cuts accumulate coarse to fine in a fixed order; each budget
    takes the longest prefix whose union stays within it, so the point
    sets are nested across budgets. The diameter delta for a budget is
    the max component diameter of the finest nerve after deleting every
    ball containing an accumulated point.
    """
    budgets = sorted(set(int(b) for b in budgets))
    if not budgets or budgets[0] < 0:
        raise ValueError("budgets must be nonnegative integers")
    plan = probes or ProbePlan(per_level=0)
    probe_list = plan.expand(hierarchy)
    nerve = build_nerve(hierarchy.covering(hierarchy.depth))
    records = []
    cuts: list[list[int]] = []
    for center, level in probe_list:
        rec = _run_probe(space, hierarchy, nerve, center, level, with_diameters=False)
        records.append(rec)
        if rec.status == "ok" and rec.verified:
            cuts.append(rec.cut_points)
        elif rec.status == "trivial":
            cuts.append([])
        else:
            cuts.append(None)

    point_to_vertices = nerve.point_to_vertices()
    acc: set = set()
    idx = 0
    sizes, deltas, point_sets, consumed = [], [], [], []
    for budget in budgets:
        while idx < len(cuts):
            if cuts[idx] is None:
                idx += 1
                continue
            merged = acc | set(cuts[idx])
            if len(merged) > budget:
                break
            acc = merged
            idx += 1
        chosen = sorted(acc)
        removed = set()
        for pnt in chosen:
            removed.update(int(v) for v in point_to_vertices[pnt])
        comps = _components_without(nerve, removed)
        delta = 0.0
        for comp in comps:
            delta = max(delta, _points_diameter(space, _component_points(nerve, comp)))
        sizes.append(len(chosen))
        deltas.append(delta)
        point_sets.append(chosen)
        consumed.append(idx)
    decreasing = all(deltas[i + 1] <= deltas[i] + 1e-12 for i in range(len(deltas) - 1))
    return WsReport(budgets, sizes, deltas, point_sets, consumed, decreasing, records)


# -- dyadic separator weight certificate --------------------------------------


@dataclass
class AnnulusCut:
    index: int
    inner: float
    outer: float
    status: str          # "cut" | "band" | "vacuous"
    cut_points: list
    cut_vertices: list

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "inner": self.inner,
            "outer": self.outer,
            "status": self.status,
            "size": len(self.cut_points),
            "cut_points": [int(p) for p in self.cut_points],
        }


@dataclass
class BoundCheck:
    z: int
    k: int
    n: int
    m: int
    p: float
    s: float
    annuli: list
    cut_union: list          # sorted point ids contributed by all layers
    covered_vertices: int    # balls touching the union (the weight's support)
    weights: WeightFunction
    vol_p: float
    k_prime: float
    bound_ratio: float
    admissible: bool
    margin: float
    note: str = ""

    def to_json(self) -> dict:
        return {
            "z": self.z, "k": self.k, "n": self.n, "m": self.m, "p": self.p,
            "s": self.s,
            "annuli": [a.to_json() for a in self.annuli],
            "cut_union": [int(p) for p in self.cut_union],
            "covered_vertices": self.covered_vertices,
            "vol_p": self.vol_p,
            "k_prime": self.k_prime,
            "bound_ratio": self.bound_ratio,
            "admissible": self.admissible,
            "margin": self.margin,
            "note": self.note,
            "weights": self.weights.to_json(),
        }


def build_theorem_weight(space, hierarchy, z: int, k: int, n: int, m: int,
                         p: float) -> BoundCheck:
    """Admissible weight from m dyadic separator layers around a point.

    Around z, each annulus between radii s/2**(i+1) and s/2**i (with
    s one third of the level-k scale) contributes a minimal set of fine
    balls separating its inner disc from beyond its outer one. Fine balls
    touching any contributed center get weight 1/m; curves from z out to
    distance s must cross every annulus, hence collect mass at least 1.
    When an annulus is too thin to cut at this resolution, the full band
    of balls centered in it is used instead, which still blocks every
    crossing but costs more volume.
    """
    if p < 1.0:
        raise ValueError(f"exponent must be at least 1, got {p}")
    if m < 1:
        raise ValueError("need at least one annulus layer")
    if k < 0 or n < 1 or k + n > hierarchy.depth:
        raise ValueError(f"(k={k}, n={n}) outside hierarchy depth {hierarchy.depth}")
    s = hierarchy.radius(k) / 3.0
    fine_r = hierarchy.radius(k + n)
    thinnest = s / 2.0 ** m
    if fine_r > thinnest + BOUNDARY_EPS:
        m_max = int(math.floor(math.log2(s / fine_r))) if fine_r < s else 0
        raise ValueError(
            f"fine radius {fine_r:.3g} cannot resolve {m} dyadic layers below {s:.3g}; "
            f"deepest feasible layer count is {max(m_max, 0)}")
    nerve = build_nerve(hierarchy.covering(k + n))
    d = space.dists_from(int(z))
    minb, maxb = nerve.ball_stats(d)
    dc = d[nerve.centers]
    annuli: list[AnnulusCut] = []
    contributed: set = set()
    for i in range(m):
        outer = s / 2.0 ** i
        inner = s / 2.0 ** (i + 1)
        # closed on the outer radius, open inner ball removed: keep d >= inner
        band_mask = (dc >= inner) & (dc <= outer)
        src = np.flatnonzero(minb <= inner)
        snk = np.flatnonzero(maxb > outer)
        if snk.size == 0 or src.size == 0:
            annuli.append(AnnulusCut(i, inner, outer, "vacuous", [], []))
            continue
        status = "band"
        cut: list[int] = []
        if np.intersect1d(src, snk).size == 0:
            local = dc <= outer + nerve.covering.radius + BOUNDARY_EPS
            finite, cut = _cut_in_subgraph(nerve, local, src, snk,
                                           np.flatnonzero(band_mask), lex=True)
            if finite:
                status = "cut"
        if status == "band":
            cut = [int(v) for v in np.flatnonzero(band_mask)]
        pts = [int(nerve.centers[v]) for v in cut]
        contributed.update(pts)
        annuli.append(AnnulusCut(i, inner, outer, status, pts, cut))
    point_to_vertices = nerve.point_to_vertices()
    covered: set = set()
    for pnt in sorted(contributed):
        covered.update(int(v) for v in point_to_vertices[pnt])
    wf = WeightFunction.indicator(nerve.n_vertices, covered, 1.0 / m)
    vol = vol_p(wf, p)
    k_prime = len(covered) / m
    bound_ratio = vol * m ** (p - 1.0)
    cut_union = sorted(contributed)
    family = point_family(nerve, int(z), s)
    note = ""
    if family.is_empty:
        admissible = True
        margin = math.inf
        note = "no curves escape past s at this resolution"
    else:
        value, _ = family.min_length(wf.values)
        admissible = value >= 1.0 - 1e-9
        margin = value - 1.0
    band_count = sum(1 for an in annuli if an.status == "band")
    if band_count:
        extra = f"{band_count} layer(s) fell back to the full annulus band"
        note = f"{note}; {extra}" if note else extra
    return BoundCheck(int(z), k, n, m, float(p), s, annuli, cut_union,
                      len(covered), wf, vol, k_prime, bound_ratio, admissible,
                      margin, note)


def eta_n(n: int, a: float) -> float:
    """Mass scale 1 / floor((n log a - log 3) / log 2) of the certificates.

    The floor counts how many dyadic layers fit between the fine scale
    a**-(k+n) and a third of the level-k scale; it must be positive, so
    small n (those with n log a < log 6) have no certificate and raise.
    """
    if a <= 1.0:
        raise ValueError(f"net base must exceed 1, got {a}")
    if n < 1:
        raise ValueError("n must be at least 1")
    layers = math.floor((n * math.log(a) - math.log(3.0)) / math.log(2.0))
    if layers <= 0:
        n_min = math.ceil(math.log(6.0) / math.log(a))
        raise ValueError(
            f"no dyadic layer fits at n={n} with base {a}; need n >= {n_min}")
    return 1.0 / layers


# -- scale-graded separator search --------------------------------------------


@dataclass
class ScaleGradedResult:
    x: int
    s: float
    r: float
    n_chain: int
    eps: float
    shell_size: int
    cover_centers: list
    candidate_size: int
    cut_points: list
    size: int
    verified: bool
    degenerate_probes: int
    note: str = ""

    def to_json(self) -> dict:
        return {
            "x": self.x, "s": self.s, "r": self.r,
            "n_chain": self.n_chain, "eps": self.eps,
            "shell_size": self.shell_size,
            "cover_centers": [int(c) for c in self.cover_centers],
            "candidate_size": self.candidate_size,
            "cut_points": [int(p) for p in self.cut_points],
            "size": self.size,
            "verified": self.verified,
            "degenerate_probes": self.degenerate_probes,
            "note": self.note,
        }


def scale_graded_uws(space, hierarchy, x: int, s: float, r: float) -> ScaleGradedResult:
    """Separator between B(x, s) and beyond B(x, r) built from shell probes.

    Chains of 1/n steps crossing the shell between the two radii must
    pass near one of the shell's eps-net centers, so the union of small
    probe cuts around those centers contains a separator; the final cut
    is the minimum one inside that candidate pool. With s = r/2 the outer
    separation predicate matches a plain probe at (x, r).
    """
    if not 0.0 < s < r:
        raise ValueError(f"need 0 < s < r, got s={s}, r={r}")
    n_chain = int(math.floor(2.0 / (r - s))) + 1
    eps = 1.0 / (4.0 * n_chain)
    d = space.dists_from(int(x))
    lo, hi = s + 1.0 / n_chain, r - 1.0 / n_chain
    shell = np.flatnonzero((d >= lo - BOUNDARY_EPS) & (d <= hi + BOUNDARY_EPS))
    if shell.size == 0:
        raise ValueError(
            f"no points in the shell [{lo:.3g}, {hi:.3g}] around point {x}")
    nerve = build_nerve(hierarchy.covering(hierarchy.depth))
    covered = np.zeros(space.n, dtype=bool)
    cover_centers = []
    for pnt in shell:
        if not covered[pnt]:
            cover_centers.append(int(pnt))
            covered[space.dists_from(int(pnt)) <= eps] = True
    pool: set = set()
    degenerate = 0
    for y in cover_centers:
        dy = space.dists_from(y)
        status, cut = _separation_probe(nerve, dy, eps, 2.0 * eps, 2.0 * eps, lex=True)
        if status == "ok":
            pool.update(cut)
        elif status == "degenerate":
            degenerate += 1
    minb, maxb = nerve.ball_stats(d)
    src = np.flatnonzero(minb <= s)
    snk = np.flatnonzero(maxb > r)
    note = ""
    if src.size == 0 or snk.size == 0:
        note = "separation trivial: one side is empty"
        return ScaleGradedResult(int(x), s, r, n_chain, eps, int(shell.size),
                                 cover_centers, len(pool), [], 0, True, degenerate, note)
    allowed = np.asarray(sorted(pool), dtype=int)
    full = np.ones(nerve.n_vertices, dtype=bool)
    finite, cut = _cut_in_subgraph(nerve, full, src, snk, allowed, lex=True)
    if not finite:
        pts = sorted(int(nerve.centers[v]) for v in pool)
        return ScaleGradedResult(int(x), s, r, n_chain, eps, int(shell.size),
                                 cover_centers, len(pool), pts, len(pts), False,
                                 degenerate, "candidate pool does not separate")
    verified = _verify_separation(nerve, set(cut), src, snk)
    pts = sorted(int(nerve.centers[v]) for v in cut)
    return ScaleGradedResult(int(x), s, r, n_chain, eps, int(shell.size),
                             cover_centers, len(pool), pts, len(pts), verified,
                             degenerate, note)
