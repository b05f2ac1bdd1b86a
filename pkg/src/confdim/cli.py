"""Command line front end.

Exit codes: 0 success, 2 when a check returns a mathematical "no"
(a verdict, not a crash), 1 on operational errors. Outputs are
deterministic for a fixed config and seed: JSON is emitted with sorted
keys and CSV uses 12 significant digits with '.' as the decimal mark.
Set CONFDIM_LOG to a level name (debug, info, warning) for diagnostics.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

from . import critical, cutpoints, generators, modulus, space as space_mod
from .nerve import annulus_family, build_nerve, point_family

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VERDICT = 2


def _parse_grid(text: str) -> list:
    parts = text.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise ValueError(f"grid must be lo:step:hi, got {text!r}")
    lo, step, hi = (float(v) for v in parts)
    if step <= 0:
        raise ValueError("grid step must be positive")
    if hi < lo:
        raise ValueError("grid upper end below lower end")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


def _parse_int_list(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip() != ""]


def _load_space(args) -> space_mod.FiniteMetricSpace:
    if getattr(args, "space", None):
        return space_mod.load_space(args.space, seed=args.seed)
    if getattr(args, "generate", None):
        with open(args.generate) as fh:
            payload = json.load(fh)
        spec = generators.GeneratorSpec.from_dict(payload)
        return generators.generate(spec)
    raise ValueError("provide a space via --space FILE or --generate SPEC.json")


def _build(args):
    sp = _load_space(args)
    hier = space_mod.build_net_hierarchy(sp, args.a, args.depth)
    return sp, hier


def _config_echo(args, keys: tuple) -> dict:
    cfg = {"subcommand": args.command, "seed": args.seed}
    for key in keys:
        val = getattr(args, key, None)
        cfg[key] = val
    return cfg


def _write_text(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(payload: dict, out: str | None) -> None:
    _write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", out)


def _fmt(v: float) -> str:
    return f"{v:.12g}"


# -- subcommands ---------------------------------------------------------------


def cmd_generate(args) -> int:
    with open(args.generate) as fh:
        payload = json.load(fh)
    spec = generators.GeneratorSpec.from_dict(payload)
    sp = generators.generate(spec)
    _emit_json({"config": _config_echo(args, ("generate",)), "space": sp.to_json()},
               args.out)
    return EXIT_OK


def cmd_nets(args) -> int:
    _, hier = _build(args)
    payload = {
        "config": _config_echo(args, ("space", "generate", "a", "depth")),
        "hierarchy": hier.summary(),
    }
    _emit_json(payload, args.out)
    return EXIT_OK


def cmd_modulus(args) -> int:
    sp, hier = _build(args)
    level = args.k + args.n
    nerve = build_nerve(hier.covering(level))
    if args.family == "annulus":
        center = args.center if args.center is not None else int(hier.levels[args.k][0])
        family = annulus_family(hier, nerve, center, args.k)
    else:
        z = args.z if args.z is not None else 0
        s = args.s if args.s is not None else hier.radius(args.k) / 3.0
        family = point_family(nerve, z, s)
    res = modulus.compute_modulus(family, args.p, tol=args.tol)
    payload = {
        "config": _config_echo(args, ("space", "generate", "a", "depth", "family",
                                      "center", "k", "n", "z", "s", "p", "tol")),
        "family": family.to_json(),
        "modulus": res.to_json(),
    }
    _emit_json(payload, args.out)
    return EXIT_OK


def _run_scan(args):
    sp, hier = _build(args)
    grid = _parse_grid(args.p_grid)
    return sp, hier, critical.scan(sp, hier, grid, args.n_max,
                                   balls_per_scale=args.balls_per_scale,
                                   tol=args.tol, workers=args.workers)


def _scan_csv(args, result) -> str:
    cfg = _config_echo(args, ("space", "generate", "a", "depth", "p_grid",
                              "n_max", "balls_per_scale", "tol", "workers"))
    lines = [f"# {key}={cfg[key]}" for key in sorted(cfg)]
    lines.append("p,n,k,M_pn,balls_sampled")
    for p, n, k, v, s in result.table_rows():
        lines.append(f"{_fmt(p)},{n},{k},{_fmt(v)},{s}")
    return "\n".join(lines) + "\n"


def cmd_scan(args) -> int:
    _, _, result = _run_scan(args)
    _write_text(_scan_csv(args, result), args.out)
    return EXIT_OK


def cmd_pc(args) -> int:
    _, _, result = _run_scan(args)
    est = critical.estimate_pc(result, decay_threshold=args.decay_threshold)
    payload = {
        "config": _config_echo(args, ("space", "generate", "a", "depth", "p_grid",
                                      "n_max", "balls_per_scale", "tol", "workers",
                                      "decay_threshold")),
        "estimate": est.to_json(),
        "entries": [{"p": p, "n": n, "value": v}
                    for (p, n), v in sorted(result.entries.items())],
    }
    _emit_json(payload, args.out)
    return EXIT_OK


def _probe_plan(args) -> cutpoints.ProbePlan | None:
    levels = tuple(_parse_int_list(args.probe_levels)) if args.probe_levels else None
    if levels is None and args.per_level is None:
        return None
    per_level = args.per_level if args.per_level is not None else 8
    return cutpoints.ProbePlan(levels=levels, per_level=per_level)


def cmd_uws(args) -> int:
    sp, hier = _build(args)
    report = cutpoints.check_uws(sp, hier, args.c_max, probes=_probe_plan(args))
    payload = {
        "config": _config_echo(args, ("space", "generate", "a", "depth", "c_max",
                                      "probe_levels", "per_level")),
        "report": report.to_json(),
    }
    _emit_json(payload, args.out)
    return EXIT_OK if report.passes else EXIT_VERDICT


def cmd_ws(args) -> int:
    sp, hier = _build(args)
    budgets = _parse_int_list(args.budgets)
    plan = _probe_plan(args) or cutpoints.ProbePlan(per_level=0)
    report = cutpoints.check_ws(sp, hier, budgets, probes=plan)
    payload = {
        "config": _config_echo(args, ("space", "generate", "a", "depth", "budgets",
                                      "probe_levels", "per_level")),
        "report": report.to_json(),
    }
    _emit_json(payload, args.out)
    return EXIT_OK if report.decreasing else EXIT_VERDICT


def cmd_bound(args) -> int:
    sp, hier = _build(args)
    m_list = _parse_int_list(args.m)
    n = args.n if args.n is not None else hier.depth - args.k
    checks = []
    all_admissible = True
    for m in m_list:
        chk = cutpoints.build_theorem_weight(sp, hier, args.z, args.k, n, m, args.p)
        checks.append(chk.to_json())
        all_admissible = all_admissible and chk.admissible
    try:
        eta = cutpoints.eta_n(n, args.a)
    except ValueError:
        eta = None
    payload = {
        "config": _config_echo(args, ("space", "generate", "a", "depth", "z", "k",
                                      "n", "m", "p")),
        "eta_n": eta,
        "checks": checks,
    }
    _emit_json(payload, args.out)
    return EXIT_OK if all_admissible else EXIT_VERDICT


def cmd_all(args) -> int:
    sp, hier = _build(args)
    grid = _parse_grid(args.p_grid)
    scan_res = critical.scan(sp, hier, grid, args.n_max,
                             balls_per_scale=args.balls_per_scale,
                             tol=args.tol, workers=args.workers)
    est = critical.estimate_pc(scan_res)
    uws = cutpoints.check_uws(sp, hier, args.c_max, probes=_probe_plan(args))
    budgets = _parse_int_list(args.budgets)
    ws = cutpoints.check_ws(sp, hier, budgets,
                            probes=_probe_plan(args) or cutpoints.ProbePlan(per_level=0))
    bound_json = None
    n_bound = hier.depth
    s = 1.0 / 3.0
    fine = hier.radius(hier.depth)
    m_max = int(math.floor(math.log2(s / fine))) if fine < s else 0
    if m_max >= 1:
        chk = cutpoints.build_theorem_weight(sp, hier, args.z, 0, n_bound,
                                             min(m_max, 6), args.p)
        bound_json = chk.to_json()
    payload = {
        "config": _config_echo(args, ("space", "generate", "a", "depth", "p_grid",
                                      "n_max", "balls_per_scale", "tol", "workers",
                                      "c_max", "budgets", "z", "p")),
        "hierarchy": hier.summary(),
        "pc": est.to_json(),
        "scan_entries": [{"p": p, "n": n, "value": v}
                         for (p, n), v in sorted(scan_res.entries.items())],
        "uws": uws.to_json(),
        "ws": ws.to_json(),
        "bound": bound_json,
    }
    _emit_json(payload, args.out)
    ok = uws.passes and ws.decreasing
    if bound_json is not None:
        ok = ok and bound_json["admissible"]
    return EXIT_OK if ok else EXIT_VERDICT


# -- parser --------------------------------------------------------------------


def _add_space_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--space", help="space JSON file (points or matrix)")
    p.add_argument("--generate", help="generator spec JSON file")
    p.add_argument("--a", type=float, default=2.0, help="net scale base (> 1)")
    p.add_argument("--depth", type=int, default=5, help="finest net level")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    p.add_argument("--out", help="output path (default stdout)")


def _add_scan_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p-grid", dest="p_grid", default="1.0:0.1:2.0",
                   help="exponent grid lo:step:hi")
    p.add_argument("--n-max", dest="n_max", type=int, default=3)
    p.add_argument("--balls-per-scale", dest="balls_per_scale", type=int, default=0,
                   help="balls sampled per (k, n) cell; 0 = all")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--workers", type=int, default=1)


def _add_probe_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--probe-levels", dest="probe_levels",
                   help="comma list of net levels to probe")
    p.add_argument("--per-level", dest="per_level", type=int, default=None,
                   help="probe centers per level; 0 = all")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="confdim",
        description="conformal dimension estimates via combinatorial modulus")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit the space JSON for a generator spec")
    p.add_argument("--generate", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("nets", help="build and summarize the net hierarchy")
    _add_space_flags(p)
    p.set_defaults(func=cmd_nets)

    p = sub.add_parser("modulus", help="modulus of one curve family at one exponent")
    _add_space_flags(p)
    p.add_argument("--family", choices=("annulus", "point"), default="annulus")
    p.add_argument("--center", type=int, default=None, help="annulus center point id")
    p.add_argument("--k", type=int, default=0, help="coarse level of the family")
    p.add_argument("--n", type=int, default=2, help="levels below k for the nerve")
    p.add_argument("--z", type=int, default=None, help="point id for a point family")
    p.add_argument("--s", type=float, default=None, help="escape radius for a point family")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_modulus)

    p = sub.add_parser("scan", help="modulus table over scales, as CSV")
    _add_space_flags(p)
    _add_scan_flags(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("pc", help="critical exponent estimate from a scan")
    _add_space_flags(p)
    _add_scan_flags(p)
    p.add_argument("--decay-threshold", dest="decay_threshold", type=float, default=None)
    p.set_defaults(func=cmd_pc)

    p = sub.add_parser("uws", help="uniform spread check on probe separators")
    _add_space_flags(p)
    _add_probe_flags(p)
    p.add_argument("--C-max", dest="c_max", type=int, required=True)
    p.set_defaults(func=cmd_uws)

    p = sub.add_parser("ws", help="budgeted spread check and component diameters")
    _add_space_flags(p)
    _add_probe_flags(p)
    p.add_argument("--budgets", required=True, help="comma list of point budgets")
    p.set_defaults(func=cmd_ws)

    p = sub.add_parser("bound", help="build and verify separator weight certificates")
    _add_space_flags(p)
    p.add_argument("--z", type=int, default=0, help="center point id")
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--n", type=int, default=None, help="defaults to depth - k")
    p.add_argument("--m", required=True, help="comma list of layer counts")
    p.add_argument("--p", type=float, required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("all", help="full report: scan, estimate, spread checks")
    _add_space_flags(p)
    _add_scan_flags(p)
    _add_probe_flags(p)
    p.add_argument("--C-max", dest="c_max", type=int, default=4)
    p.add_argument("--budgets", default="4,8,16")
    p.add_argument("--z", type=int, default=0)
    p.add_argument("--p", type=float, default=1.5)
    p.set_defaults(func=cmd_all)
    return top


def main(argv=None) -> int:
    level = os.environ.get("CONFDIM_LOG")
    if level:
        logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError,
            space_mod.SpaceValidationError,
            generators.GeneratorError,
            modulus.ModulusError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
