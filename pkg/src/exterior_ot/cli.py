"""Command-line experiment runner.

Exit status: 0 on success, 1 on a contract violation or solver failure,
2 on a configuration or usage error.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, oracle
from .artifacts import write_density_csv, write_fields_csv, write_json, write_plan_csv, write_table_csv
from .config import TASKS, ConfigError, ExperimentConfig, load_config
from .domain import DensityField, CostSpec, mass
from .dual import c_transform, dual_from_plan, maximal_potential, slackness_report
from .optimize import energy_curve, grid_for_mass, maximize_shape
from .primal import InfeasibleError, SolverError, plan_marginals, saturation_report, solve_exterior
from .rearrange import (
    LevelSet,
    brunn_minkowski_check,
    ctransform_rearrangement_check,
    decreasing_rearrangement,
    hardy_littlewood_check,
    increasing_rearrangement,
    radial_order,
)
from .verify import verify_suite

GAP_RTOL = 1e-6
FEAS_TOL = 1e-9


def _solve(cfg: ExperimentConfig):
    return solve_exterior(cfg.density, cfg.cost, radius=cfg.params.get("radius", "auto"),
                          tie_break=cfg.params.get("tie_break", "priority"))


def _gap_check(value, gap, violations):
    if abs(gap) > GAP_RTOL * (1 + abs(value)):
        violations.append(f"duality gap {gap:.3e} exceeds {GAP_RTOL:g} (1 + value)")


def _radial_rows(grid, **cols):
    order, dist = radial_order(grid)
    arrays = [np.asarray(v, dtype=float).ravel()[order] for v in cols.values()]
    return ["radius", *cols], ([r, *(a[i] for a in arrays)] for i, r in enumerate(dist))


def task_solve(cfg, out, timing):
    f, c = cfg.density, cfg.cost
    plan, value = _solve(cfg)
    timing["solve"] = plan.runtime
    first, second = plan_marginals(plan)
    sat = saturation_report(f, plan, c)
    pair = dual_from_plan(f, plan, c, rtol=math.inf)
    gap = value - pair.objective(f)
    violations = []
    _gap_check(value, gap, violations)
    if not plan.certified:
        violations.append("plan is optimal only within the pruned arc set")
    if np.max(np.abs(first.values - f.values)) > FEAS_TOL:
        violations.append("first marginal differs from f")
    if np.max(second.values + f.values) > 1 + FEAS_TOL:
        violations.append("second marginal exceeds the free space 1 - f")
    files = [write_density_csv(out / "density.csv", f), write_plan_csv(out / "plan.csv", plan),
             write_fields_csv(out / "marginals.csv", f.grid, f=f.values, g=second.values)]
    results = {"value": value, "gap": gap, "mass": mass(f), "entries": plan.n_entries,
               "saturation_fraction": sat.fraction, "saturation_violations": len(sat.violating_cells),
               "certified": plan.certified, "radius": plan.radius, "radius_mode": plan.radius_mode}
    return results, violations, files


def task_dual(cfg, out, timing):
    f, c = cfg.density, cfg.cost
    plan, value = _solve(cfg)
    timing["solve"] = plan.runtime
    t0 = time.perf_counter()
    pair = maximal_potential(f, c, plan)
    timing["potential"] = time.perf_counter() - t0
    gap = value - pair.objective(f)
    slack = slackness_report(f, plan, pair)
    violations = []
    _gap_check(value, gap, violations)
    infeasible = pair.violation()
    if infeasible > 0:
        violations.append(f"potentials violate the constraints by {infeasible:.3e}")
    if slack.saturation_violation > 0 or slack.empty_violation > 0:
        violations.append("complementary slackness fails")
    files = [write_fields_csv(out / "potentials.csv", f.grid, phi=pair.phi, psi=pair.psi, chi=slack.chi),
             write_table_csv(out / "profiles.csv", *_radial_rows(f.grid, phi=pair.phi, psi=pair.psi))]
    results = {"value": value, "gap": gap, "constraint_violation": infeasible, "canonical": pair.is_canonical(),
               "psi_min": float(pair.psi.min()), "phi_max": float(pair.phi.max()), "slackness": slack.as_dict()}
    return results, violations, files


def task_rearr(cfg, out, timing):
    f, c = cfg.density, cfg.cost
    grid = f.grid
    plan, _ = _solve(cfg)
    pair = maximal_potential(f, c, plan)
    psi = pair.psi
    rep = ctransform_rearrangement_check(psi, grid, c)
    hl = hardy_littlewood_check(f, pair.phi)
    s = cfg.params.get("erosion", 2 * grid.spacing)
    support = LevelSet(grid, f.values > 0)
    bm = brunn_minkowski_check(support, s) if support.count else None
    violations = []
    if not rep.passed:
        violations.append("(psi^c)^* <= (psi_*)^c fails")
    if not hl.passed:
        violations.append("Hardy-Littlewood inequality fails")
    if bm is not None and not bm.passed:
        violations.append("Brunn-Minkowski erosion check fails")
    _, lhs = decreasing_rearrangement(c_transform(psi, grid, c), grid)
    _, psi_star = increasing_rearrangement(psi, grid)
    rhs = c_transform(psi_star, grid, c)
    files = [write_table_csv(out / "profiles.csv", *_radial_rows(grid, psi_star=psi_star, lhs=lhs, rhs=rhs))]
    results = {"ctransform": rep.as_dict(), "hardy_littlewood": hl.as_dict(),
               "brunn_minkowski": None if bm is None else bm.as_dict(), "erosion_radius": s}
    return results, violations, files


def _shape_grid(cfg, m):
    if cfg.grid is not None:
        return cfg.grid
    return grid_for_mass(m, cfg.params["spacing"], cfg.params["dim"])


def task_optimize(cfg, out, timing):
    m = cfg.params["mass"]
    grid = _shape_grid(cfg, m)
    trace = maximize_shape(m, cfg.cost, grid, init=cfg.params.get("init", "ball"),
                           max_iter=cfg.params.get("max_iter", 100), tol=cfg.params.get("tol", 1e-8),
                           seed=cfg.seed)
    violations = []
    if any(b <= a for a, b in zip(trace.values[:-1], trace.values[1:])):
        violations.append("accepted iterates do not increase the value")
    files = [write_density_csv(out / "density.csv", trace.density),
             write_table_csv(out / "trace.csv", ["iteration", "value"], enumerate(trace.values)),
             write_table_csv(out / "profiles.csv", *_radial_rows(grid, value=trace.density.values))]
    results = {"value": trace.value, "mass": m, "iterations": trace.iterations, "reason": trace.reason,
               "symmetric_difference": trace.symmetric_difference,
               "relative_symmetric_difference": trace.symmetric_difference / m}
    return results, violations, files


def task_curve(cfg, out, timing):
    masses = cfg.params["masses"]
    spacing = cfg.grid.spacing if cfg.grid is not None else cfg.params["spacing"]
    dim = cfg.grid.dim if cfg.grid is not None else cfg.params["dim"]
    curve = energy_curve(masses, cfg.cost, spacing, dim, tol=cfg.params.get("tol", 1e-8), grid=cfg.grid,
                         workers=cfg.threads)
    timing["points"] = {str(p["m"]): p["runtime"] for p in curve.points}
    violations = []
    if not curve.e_increasing:
        violations.append("e(m) = E(m)/m is not strictly increasing")
    violations += [f"E({s['parts'][0]}) + E({s['parts'][1]}) < E({s['m']}) fails" for s in curve.splits
                   if not s["strict"]]
    rows = ([p["m"], p["E"], p["e"], p["iterations"]] for p in curve.points)
    files = [write_table_csv(out / "curve.csv", ["m", "E", "e", "iterations"], rows)]
    results = {"points": [{k: v for k, v in p.items() if k != "runtime"} for p in curve.points],
               "e_increasing": curve.e_increasing, "e_min_increment": curve.e_min_increment,
               "splits": curve.splits}
    return results, violations, files


def task_verify(cfg, out, timing):
    report = verify_suite(cfg.params.get("level", "quick"), cfg.seed, cfg.params.get("tolerances"),
                          cfg.params.get("only"))
    timing.update(report.timing)
    files = [write_json(out / "verify.json", report.as_dict(with_timing=False))]
    for r in report.results:
        print(r.line())
    violations = [f"property {r.name} failed" for r in report.results if not r.passed]
    results = {"level": report.level, "passed": report.passed,
               "properties": {r.name: bool(r.passed) for r in report.results}}
    return results, violations, files


def _interval(f: DensityField):
    """``(level, left, right)`` if ``f`` is a constant level on one interval of a 1-D grid."""
    if f.grid.dim != 1:
        return None
    v = f.flat
    on = np.flatnonzero(v > 0)
    if on.size == 0 or np.any(np.diff(on) != 1) or np.ptp(v[on]) > 0:
        return None
    x = f.grid.centers()[:, 0]
    h = f.grid.spacing
    return float(v[on[0]]), float(x[on[0]] - h / 2), float(x[on[-1]] + h / 2)


def task_oracle(cfg, out, timing):
    f, c = cfg.density, cfg.cost
    plan, value = _solve(cfg)
    t0 = time.perf_counter()
    lp_value, _, lp_units = oracle.brute_lp(f, c, plan.mass_bits, plan.cost_bits)
    timing["brute_lp"] = time.perf_counter() - t0
    violations = []
    if lp_units != plan.value_units:
        violations.append(f"solver value units {plan.value_units} differ from LP {lp_units}")
    results = {"value": value, "lp_value": lp_value, "value_units": plan.value_units, "lp_value_units": lp_units,
               "cost_bits": plan.cost_bits, "mass_bits": plan.mass_bits}
    interval = _interval(f)
    if interval is not None and isinstance(c, CostSpec) and c.radial and c.is_convex():
        level, left, right = interval
        results["monotone_1d"] = {"level": level, "left": left, "right": right,
                                  "value": oracle.monotone_1d(level, left, right, c)}
    files = [write_json(out / "oracle.json", results)]
    return results, violations, files


RUNNERS = {"solve": task_solve, "dual": task_dual, "rearr": task_rearr, "optimize": task_optimize,
           "curve": task_curve, "verify": task_verify, "oracle": task_oracle}


def run(cfg: ExperimentConfig) -> int:
    """Execute one task, write ``summary.json``, ``timing.json`` and data files; return the exit status."""
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    timing: dict = {}
    t0 = time.perf_counter()
    summary = {"task": cfg.task, "version": __version__, "inputs": cfg.describe()}
    try:
        results, violations, files = RUNNERS[cfg.task](cfg, out, timing)
    except (InfeasibleError, SolverError, oracle.OracleSizeError) as exc:
        summary.update(status="error", error=f"{type(exc).__name__}: {exc}", violations=[str(exc)])
        results, violations, files = None, [str(exc)], []
        print(f"error: {cfg.task}: {exc}", file=sys.stderr)
    else:
        summary.update(status="violation" if violations else "ok", violations=violations, results=results)
    summary["files"] = sorted(Path(p).name for p in files)
    timing["total"] = time.perf_counter() - t0
    write_json(out / "summary.json", summary)
    write_json(out / "timing.json", timing)
    for v in violations:
        print(f"violation: {v}", file=sys.stderr)
    return 1 if violations else 0


def _parse_tolerance(text: str):
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("expected NAME=VALUE")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tolerance value {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exterior-ot", description="Exterior optimal transport experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task, help=f"run the {task} task")
        p.add_argument("--config", type=Path, required=task != "verify", help="INI config file")
        p.add_argument("--out", type=Path, help="output directory (overrides [output] dir)")
        p.add_argument("--seed", type=int, help="random seed (overrides [task] seed)")
        p.add_argument("--threads", type=int, help="worker processes for independent curve points")
        if task == "verify":
            p.add_argument("--level", choices=("quick", "full"), help="suite size")
            p.add_argument("--tolerance", type=_parse_tolerance, action="append", default=[],
                           metavar="NAME=VALUE", help="override one property's tolerance")
            p.add_argument("--only", action="append", metavar="NAME", help="run only these properties")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    overrides = {"task": args.task, "out": args.out, "seed": args.seed, "threads": args.threads}
    try:
        if args.config is not None:
            cfg = load_config(args.config, overrides)
        else:
            cfg = ExperimentConfig("verify", None, CostSpec.power(1.0), None,
                                   out_dir=(args.out or Path("out/verify")).resolve(),
                                   seed=args.seed or 0, threads=args.threads or 1)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.task == "verify":
        if args.level:
            cfg.params["level"] = args.level
        if args.tolerance:
            cfg.params["tolerances"] = dict(args.tolerance)
        if args.only:
            cfg.params["only"] = list(args.only)
        try:
            return run(cfg)
        except ValueError as exc:
            print(f"usage error: {exc}", file=sys.stderr)
            return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
