"""Command-line entry point.

Every command writes its numbers to ``--out`` (CSV tables, JSON summaries) and a
``manifest_<command>.json`` listing the files, the config hash, package versions
and wall-clock timings. Timings appear only in the manifest so that repeated
runs with the same config and seed give byte-identical result files. The exit
status is 0 exactly when every check performed by the command passes.

Log verbosity is read from the ``ANNULUS_LOG_LEVEL`` environment variable.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import checks
from .config import RunConfig, load_config
from .energy import eval_FL, excess_identity_check
from .io import ResultManifest, load_measure, save_measure, write_csv, write_gamma_table, write_json
from .measure import default_k_set, equipartition_report, measure_grid, minimize_Finfty, smallk_threshold
from .recovery import run_gamma_limsup
from .relaxed import check_hypothesis, relaxed_energy_closed_form, solve_free_boundary

log = logging.getLogger("annulus_wrinkles")

COMMANDS = ("relaxed", "energy-eval", "minimize", "recover", "gamma-scan", "verify")
LOG_ENV = "ANNULUS_LOG_LEVEL"


def _strip_timings(obj, timings: dict, prefix: str = ""):
    """Remove ``runtime`` entries from nested results, collecting them in ``timings``."""
    if isinstance(obj, dict):
        out = {}
        for key, value in obj.items():
            name = f"{prefix}.{key}" if prefix else str(key)
            if key == "runtime":
                timings[name] = value
            else:
                out[key] = _strip_timings(value, timings, name)
        return out
    if isinstance(obj, list):
        return [_strip_timings(v, timings, f"{prefix}[{i}]") for i, v in enumerate(obj)]
    return obj


def _k_set(cfg: RunConfig) -> np.ndarray:
    g = cfg.grids
    return default_k_set(g.nk, k_min=g.k_min, k_max=g.k_max)


def _minimize(cfg: RunConfig, sol, manifest: ResultManifest):
    t0 = time.perf_counter()
    res = minimize_Finfty(sol, measure_grid(sol, cfg.grids.nr), _k_set(cfg))
    manifest.timings["minimize"] = time.perf_counter() - t0
    return res


def _record(manifest: ResultManifest, results: list) -> bool:
    for res in results:
        manifest.checks[res.name] = bool(res.passed)
        print(res.line())
    return all(r.passed for r in results)


def cmd_relaxed(cfg: RunConfig, args, out: Path, manifest: ResultManifest) -> bool:
    hyp = check_hypothesis(cfg.lame)
    sol = solve_free_boundary(cfg.lame)
    oracle = checks.check_relaxed_oracle(cfg.lame, cfg.grids.relaxed_nodes, cfg.tolerances)
    el = checks.check_el_order(cfg.lame, tolerances=cfg.tolerances)
    summary = {
        "lame": cfg.lame.as_dict(),
        "hypothesis": {"admissible": hyp.admissible, "load_ok": hyp.load_ok, "ratio_ok": hyp.ratio_ok},
        "R0": sol.R0,
        "remark_R0": sol.remark_R0,
        "A": sol.A,
        "B": sol.B,
        "C": sol.C,
        "E0": relaxed_energy_closed_form(sol),
        "oracle": oracle.details,
        "el_order": el.details,
    }
    manifest.add(write_json(out / "relaxed.json", _strip_timings(summary, manifest.timings)))
    r = np.linspace(cfg.lame.R_in, cfg.lame.R_out, cfg.grids.relaxed_nodes)
    rows = zip(r, sol.ustar(r), sol.ustar_prime(r), sol.profile(r))
    manifest.add(write_csv(out / "relaxed_profile.csv", ("r", "ustar", "ustar_prime", "profile"), rows))
    return _record(manifest, [oracle, el])


def cmd_energy_eval(cfg: RunConfig, args, out: Path, manifest: ResultManifest) -> bool:
    sol = solve_free_boundary(cfg.lame)
    nr = args.nr or cfg.grids.energy_nr
    L = args.L[0] if args.L else 1.0
    seeds = (cfg.seed,)
    field = checks.random_band_limited_field(sol, nr, cfg.grids.theta_count, cfg.seed)
    ex = excess_identity_check(field, args.h, sol)
    breakdown = eval_FL(checks.random_band_limited_field(sol, nr, cfg.grids.theta_count, cfg.seed,
                                                          period=2 * np.pi * L), L, sol)
    excess = checks.check_excess_identity(sol, seeds, nr, cfg.grids.theta_count, args.h, cfg.tolerances)
    planch = checks.check_plancherel(sol, seeds, tolerances=cfg.tolerances)
    summary = {
        "seed": cfg.seed,
        "nr": nr,
        "theta_count": cfg.grids.theta_count,
        "h": args.h,
        "Eh": ex.Eh,
        "E0_grid": ex.E0,
        "excess_form": ex.excess,
        "residual": ex.residual,
        "relative_residual": ex.relative,
        "L": L,
        "FL": breakdown.as_dict(),
        "plancherel": planch.details,
    }
    manifest.add(write_json(out / "energy.json", summary))
    return _record(manifest, [excess, planch])


def cmd_minimize(cfg: RunConfig, args, out: Path, manifest: ResultManifest) -> bool:
    sol = solve_free_boundary(cfg.lame)
    res = _minimize(cfg, sol, manifest)
    eq = equipartition_report(res.mu, sol)
    sk = smallk_threshold(res.mu, rtol=cfg.tolerances["smallk_mass"])
    check = checks.check_minimizer(sol, res, tolerances=cfg.tolerances)
    summary = {
        "value": res.value.as_dict(),
        "dual_bound": res.dual_bound,
        "certified_gap": res.certified_gap,
        "constraint_residual": res.constraint_residual,
        "status": res.status,
        "method": res.method,
        "equipartition": {"global_gap": eq.global_gap, "stretching": eq.stretching_total,
                          "bending": eq.bending_total},
        "smallk": {"threshold": sk.threshold, "mass_fraction_below": sk.mass_fraction_below,
                   "trivial": sk.trivial},
        "check": check.details,
    }
    manifest.add(write_json(out / "minimize.json", _strip_timings(summary, manifest.timings)))
    for path in save_measure(res.mu, out / "measure", {"Finfty": res.value.total}):
        manifest.add(path)
    return _record(manifest, [check])


def _gamma(cfg: RunConfig, args, out: Path, manifest: ResultManifest, mu, sol, schedule) -> list:
    t0 = time.perf_counter()
    rows = run_gamma_limsup(mu, sol, schedule)
    manifest.timings["gamma"] = time.perf_counter() - t0
    manifest.add(write_gamma_table(out / "gamma_table.csv", rows))
    full = [row.as_dict() for row in rows]
    manifest.add(write_json(out / "gamma_rows.json", _strip_timings({"rows": full}, manifest.timings)))
    return rows


def cmd_recover(cfg: RunConfig, args, out: Path, manifest: ResultManifest) -> bool:
    sol = solve_free_boundary(cfg.lame)
    mu = load_measure(args.measure) if args.measure else _minimize(cfg, sol, manifest).mu
    schedule = tuple(sorted(args.L)) if args.L else cfg.schedule
    rows = _gamma(cfg, args, out, manifest, mu, sol, schedule)
    zero = all(checks.terms_vanish(row) for row in rows)
    exact = max(row.constraint_defect for row in rows) < 1e-12
    per = max(row.periodicity_defect for row in rows)
    ker = max(row.kernel_excess for row in rows)
    ok = zero and exact and per <= cfg.tolerances["periodicity"] and ker <= cfg.tolerances["kernel"]
    local = checks.CheckResult("recovery identities", ok,
                               {"zero_terms": zero, "exact_constraint": exact, "periodicity": per,
                                "kernel_excess": ker},
                               f"terms 2 and 4 zero: {zero}, exact constraint: {exact}, "
                               f"periodicity defect {per:.1e}, max(|a'| - a/eps) {ker:.1e}")
    return _record(manifest, [local])


def cmd_gamma_scan(cfg: RunConfig, args, out: Path, manifest: ResultManifest) -> bool:
    sol = solve_free_boundary(cfg.lame)
    mu = load_measure(args.measure) if args.measure else _minimize(cfg, sol, manifest).mu
    schedule = tuple(sorted(args.L)) if args.L else cfg.schedule
    rows = _gamma(cfg, args, out, manifest, mu, sol, schedule)
    check = checks.check_gamma_limsup(sol, mu, schedule, rows=rows, tolerances=cfg.tolerances)
    manifest.add(write_json(out / "gamma_check.json", check.details))
    return _record(manifest, [check])


def cmd_verify(cfg: RunConfig, args, out: Path, manifest: ResultManifest) -> bool:
    g = cfg.grids
    results = checks.run_all(cfg.lame, cfg.tolerances, cfg.schedule, nr=g.nr, nk=g.nk,
                             relaxed_nodes=g.relaxed_nodes, energy_nr=g.energy_nr,
                             theta_count=g.theta_count, seed=cfg.seed)
    report = {r.name: {"passed": r.passed, "details": r.details} for r in results}
    manifest.add(write_json(out / "verify.json", _strip_timings(report, manifest.timings)))
    return _record(manifest, results)


HANDLERS = {
    "relaxed": cmd_relaxed,
    "energy-eval": cmd_energy_eval,
    "minimize": cmd_minimize,
    "recover": cmd_recover,
    "gamma-scan": cmd_gamma_scan,
    "verify": cmd_verify,
}


def run_command(name: str, cfg: RunConfig, args=None) -> ResultManifest:
    """Run one command and write its manifest; ``manifest.status`` is ``"ok"`` or ``"failed"``."""
    if name not in HANDLERS:
        raise ValueError(f"unknown command {name!r}; expected one of {', '.join(COMMANDS)}")
    args = args if args is not None else build_parser().parse_args([name])
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = ResultManifest(name, cfg.config_hash())
    manifest.add(write_json(out / f"config_{name}.json", cfg.to_dict()))
    t0 = time.perf_counter()
    ok = HANDLERS[name](cfg, args, out, manifest)
    manifest.timings["total"] = time.perf_counter() - t0
    manifest.status = "ok" if ok else "failed"
    manifest.add(out / f"manifest_{name}.json")
    manifest.write(out)
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annulus-wrinkles",
                                     description="Wrinkling of a radially stretched annular sheet.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON run configuration")
        p.add_argument("--out", type=str, help="output directory")
        p.add_argument("--seed", type=int, help="seed for randomized fields and measures")
        p.add_argument("--L", type=float, nargs="+", help="scale(s) overriding the schedule")
        p.add_argument("--nr", type=int, help="radial resolution override")
        p.add_argument("--nk", type=int, help="number of frequencies override")
        if name in ("recover", "gamma-scan"):
            p.add_argument("--measure", type=Path, help="measure stem written by 'minimize' (no suffix)")
        if name == "energy-eval":
            p.add_argument("--h", type=float, default=1e-2, help="sheet thickness")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {"output_dir": args.out, "seed": args.seed, "nk": args.nk}
    # --nr sets the energy lattice for energy-eval and the measure grid elsewhere
    if args.command != "energy-eval":
        over["nr"] = args.nr
    if args.L and args.command == "verify":
        over["schedule"] = tuple(sorted(args.L))
    return cfg.with_overrides(**over)


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get(LOG_ENV, "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        manifest = run_command(args.command, cfg, args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error ({args.command}): {exc}", file=sys.stderr)
        return 2
    print(f"{args.command}: {manifest.status}; results in {cfg.output_dir}")
    return 0 if manifest.status == "ok" else 1


if __name__ == "__main__":
    sys.exit(main())
