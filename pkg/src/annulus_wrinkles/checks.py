"""Quantitative checks of the whole pipeline, one function per property.

Each check returns a :class:`CheckResult` with the measured numbers, so the same
code backs the ``verify`` command and the acceptance tests.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_SCHEDULE, DEFAULT_TOLERANCES
from .energy import DisplacementField, eval_FL, excess_identity_check, leading_term
from .fourier import fourier_forward, theta_lattice
from .grids import RadialGrid
from .measure import (
    FinftyOperator,
    FrequencyMeasure,
    MinimizeResult,
    default_k_set,
    equipartition_report,
    eval_Finfty,
    finfty_gradient,
    measure_grid,
    minimize_Finfty,
    single_frequency_measure,
    smallk_threshold,
)
from .recovery import construct_recovery, run_gamma_limsup
from .relaxed import LameConfig, RelaxedSolution, el_residual, minimize_relaxed_numeric, solve_free_boundary


@dataclass
class CheckResult:
    """Outcome of one check; ``details`` holds the measured quantities."""

    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    summary: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.summary}"


def _tol(tolerances, key):
    return (tolerances or DEFAULT_TOLERANCES).get(key, DEFAULT_TOLERANCES[key])


def terms_vanish(row, rtol: float = 1e-15) -> bool:
    """Terms 2 and 4 of a limsup row are zero up to round-off of the total.

    Term 2 is zero because the wrinkles live where ``u* <= 0``; term 4 cancels
    through the choice of ``u_theta`` and is left with products of round-off.
    """
    bd = row.breakdown
    return bd.term2 == 0.0 and abs(bd.term4) <= rtol * abs(bd.total)


def random_band_limited_field(sol: RelaxedSolution, nr: int, theta_count: int, seed: int,
                              amp: float = 0.05, jmax: int | None = None, perturb_mean: bool = True,
                              period: float = 2 * np.pi) -> DisplacementField:
    """Random trigonometric polynomial fields with cubic radial profiles.

    ``u_r`` is ``u*`` plus the perturbation. Harmonics run up to ``jmax``
    (default ``theta_count // 4``, the bandwidth limit), with amplitudes decaying
    like ``1 / (1 + j)^2``. ``perturb_mean=False`` drops the angle-independent mode.
    """
    rng = np.random.default_rng(seed)
    grid = RadialGrid.uniform(sol.cfg.R_in, sol.cfg.R_out, nr)
    r = grid.nodes
    theta = theta_lattice(theta_count, period)
    jmax = theta_count // 4 if jmax is None else jmax
    x = (r - r.mean()) / (r[-1] - r[0])

    def component():
        out = np.zeros((nr, theta_count))
        for j in range(0 if perturb_mean else 1, jmax + 1):
            c = rng.standard_normal((2, 4)) / (1 + j) ** 2
            kt = 2 * np.pi * j / period * theta
            out += np.polyval(c[0], x)[:, None] * np.cos(kt) + np.polyval(c[1], x)[:, None] * np.sin(kt)
        return amp * out

    return DisplacementField(grid, period, sol.ustar(r)[:, None] + component(), component(), component())


def random_feasible_measure(sol: RelaxedSolution, r_grid: RadialGrid, k_set: np.ndarray,
                            rng: np.random.Generator) -> FrequencyMeasure:
    """Strictly positive densities satisfying the marginal constraint exactly."""
    w = rng.random((r_grid.size, k_set.size)) + 1e-3
    w /= w.sum(axis=1, keepdims=True)
    return FrequencyMeasure(r_grid, k_set, w * sol.profile(r_grid.nodes)[:, None])


# 1 -------------------------------------------------------------------------------------------
def check_relaxed_oracle(cfg: LameConfig, nodes: int = 2048, tolerances=None) -> CheckResult:
    """Closed form versus the independent numerical minimizer."""
    sol = solve_free_boundary(cfg)
    grid = RadialGrid.uniform(cfg.R_in, cfg.R_out, nodes)
    t0 = time.perf_counter()
    res = minimize_relaxed_numeric(cfg, grid, tol=_tol(tolerances, "relaxed_solver"))
    runtime = time.perf_counter() - t0
    dist = float(np.max(np.abs(res.v - sol.ustar(grid.nodes))))
    h = (cfg.R_out - cfg.R_in) / (nodes - 1)
    cell_offset = abs(res.sign_change - sol.R0) / h
    remark_offset = abs(res.sign_change - sol.remark_R0) / h if math.isfinite(sol.remark_R0) else math.inf
    verdict = "quadratic root" if cell_offset <= 1 < remark_offset else (
        "remark value" if remark_offset <= 1 < cell_offset else "undecided")
    ok = dist < _tol(tolerances, "oracle_distance") and cell_offset <= 1 and runtime < 60
    details = dict(R0=sol.R0, remark_R0=sol.remark_R0, oracle_sign_change=res.sign_change,
                   max_distance=dist, cell_offset=cell_offset, remark_cell_offset=remark_offset,
                   verdict=verdict, iterations=res.iterations, E0=sol.E0, runtime=runtime)
    summary = (f"max|v-u*|={dist:.2e}, sign change {res.sign_change:.6f} vs R0={sol.R0:.6f} "
               f"({cell_offset:.2f} cells), sqrt(-A/B)={sol.remark_R0:.6f}, verdict: {verdict}, "
               f"{runtime:.1f}s")
    return CheckResult("relaxed oracle equivalence", ok, details, summary)


# 2 -------------------------------------------------------------------------------------------
def check_el_order(cfg: LameConfig, sizes=(201, 401, 801, 1601), exclude_cells: int = 5,
                   tolerances=None) -> CheckResult:
    """Max residual away from ``R0`` on successively halved uniform grids."""
    sol = solve_free_boundary(cfg)
    errs = []
    for n in sizes:
        grid = RadialGrid.uniform(cfg.R_in, cfg.R_out, n)
        r = grid.nodes[1:-1]
        h = (cfg.R_out - cfg.R_in) / (n - 1)
        res = el_residual(sol, grid)
        far = np.abs(r - sol.R0) > exclude_cells * h
        errs.append(float(np.max(np.abs(res[far]))))
    ratios = [a / b for a, b in zip(errs[:-1], errs[1:])]
    ok = min(ratios) >= _tol(tolerances, "el_order_ratio")
    summary = "residuals " + ", ".join(f"{e:.2e}" for e in errs) + "; ratios " + ", ".join(
        f"{q:.2f}" for q in ratios)
    return CheckResult("Euler-Lagrange residual order", ok, dict(sizes=list(sizes), residuals=errs,
                                                                  ratios=ratios), summary)


# 3 -------------------------------------------------------------------------------------------
def check_plancherel(sol: RelaxedSolution, seeds=(0, 1, 2), nr: int = 513, theta_count: int = 64,
                     tolerances=None) -> CheckResult:
    """Physical-space ``term5`` versus the Fourier-space leading term."""
    rel = []
    for seed in seeds:
        f = random_band_limited_field(sol, nr, theta_count, seed)
        t5 = eval_FL(f, 1.0, sol).term5
        lt = leading_term(fourier_forward(f.xi, f.period, f.r_grid), sol)
        rel.append(abs(t5 - lt) / abs(lt))
    ok = max(rel) < _tol(tolerances, "plancherel")
    return CheckResult("Plancherel / leading term", ok, dict(relative=rel),
                       "relative differences " + ", ".join(f"{x:.1e}" for x in rel))


# 4 -------------------------------------------------------------------------------------------
def check_excess_identity(sol: RelaxedSolution, seeds=(0, 1, 2), nr: int = 2048, theta_count: int = 256,
                          h: float = 1e-2, tolerances=None) -> CheckResult:
    """``E_h - E0`` versus the completed-square form on random fields."""
    rel = []
    for seed in seeds:
        f = random_band_limited_field(sol, nr, theta_count, seed)
        rel.append(excess_identity_check(f, h, sol).relative)
    ok = max(rel) < _tol(tolerances, "excess_identity")
    return CheckResult("excess-energy identity", ok, dict(relative=rel, h=h),
                       "relative residuals " + ", ".join(f"{x:.1e}" for x in rel))


# 5 -------------------------------------------------------------------------------------------
def check_finfty_structure(sol: RelaxedSolution, nr: int = 40, nk: int = 8, seed: int = 0,
                           tolerances=None) -> CheckResult:
    """1-homogeneity, midpoint convexity and the analytic gradient."""
    rng = np.random.default_rng(seed)
    grid = measure_grid(sol, nr)
    k = default_k_set(nk, n_geometric=nk // 2)
    mu = random_feasible_measure(sol, grid, k, rng)
    F = eval_Finfty(mu, sol).total
    hom = max(abs(eval_Finfty(mu.scaled(t), sol).total - t * F) / abs(t * F) for t in (0.5, 2.0, 7.0))

    slack = _tol(tolerances, "convexity")
    worst = -np.inf
    for _ in range(50):
        m1 = random_feasible_measure(sol, grid, k, rng)
        m2 = random_feasible_measure(sol, grid, k, rng)
        mid = FrequencyMeasure(grid, k, 0.5 * (m1.b + m2.b))
        lhs = eval_Finfty(mid, sol).total
        rhs = 0.5 * (eval_Finfty(m1, sol).total + eval_Finfty(m2, sol).total)
        worst = max(worst, (lhs - rhs) / rhs)

    op = FinftyOperator(sol, grid, k)
    g = finfty_gradient(mu, sol)
    flat = rng.choice(mu.b.size, size=100, replace=False)
    grad_err = 0.0
    for idx in flat:
        i, j = np.unravel_index(idx, mu.b.shape)
        step = 1e-3 * mu.b[i, j]

        def shifted(s):
            b = mu.b.copy()
            b[i, j] += s
            return op.value(b)

        # fourth-order central stencil
        fd = (8 * (shifted(step) - shifted(-step)) - (shifted(2 * step) - shifted(-2 * step))) / (12 * step)
        grad_err = max(grad_err, abs(fd - g[i, j]) / max(abs(g[i, j]), 1e-300))
    ok = hom < _tol(tolerances, "homogeneity") and worst <= slack and grad_err < _tol(tolerances, "gradient")
    summary = f"homogeneity {hom:.1e}, worst convexity excess {worst:.1e}, gradient error {grad_err:.1e}"
    return CheckResult("F_inf structure", ok, dict(homogeneity=hom, convexity_excess=worst,
                                                   gradient_error=grad_err), summary)


# 6 -------------------------------------------------------------------------------------------
def check_minimizer(sol: RelaxedSolution, result: MinimizeResult | None = None, nr: int = 200, nk: int = 64,
                    tolerances=None) -> CheckResult:
    """Feasibility, baselines, equipartition and the small-k gap of the minimizer."""
    if result is None:
        result = minimize_Finfty(sol, measure_grid(sol, nr), default_k_set(nk))
    mu = result.mu
    baselines = [eval_Finfty(single_frequency_measure(sol, mu.r_grid, mu.k_set, j), sol).total
                 for j in range(mu.k_set.size)]
    eq = equipartition_report(mu, sol)
    sk = smallk_threshold(mu, rtol=_tol(tolerances, "smallk_mass"))
    value = result.value.total
    ok = (result.constraint_residual < _tol(tolerances, "constraint")
          and value < min(baselines)
          and eq.global_gap < _tol(tolerances, "equipartition")
          and sk.threshold > 0 and sk.mass_fraction_below < _tol(tolerances, "smallk_mass")
          and result.runtime < 600)
    details = dict(value=value, dual_bound=result.dual_bound, certified_gap=result.certified_gap,
                   constraint_residual=result.constraint_residual, best_single=min(baselines),
                   best_single_k=float(mu.k_set[int(np.argmin(baselines))]),
                   equipartition_gap=eq.global_gap, smallk_threshold=sk.threshold,
                   smallk_fraction=sk.mass_fraction_below, smallk_trivial=sk.trivial,
                   runtime=result.runtime)
    summary = (f"F_inf={value:.5f} (certified gap {result.certified_gap:.1e}), residual "
               f"{result.constraint_residual:.1e}, best single-k {min(baselines):.4f}, equipartition gap "
               f"{eq.global_gap:.2%}, small-k threshold {sk.threshold:.3f} (fraction "
               f"{sk.mass_fraction_below:.1e}), {result.runtime:.1f}s")
    return CheckResult("constrained minimization", ok, details, summary)


# 7 -------------------------------------------------------------------------------------------
def check_log_divergence(sol: RelaxedSolution, n: int = 200, nk: int = 64, results: dict | None = None,
                         tolerances=None) -> CheckResult:
    """Single-frequency energy grows linearly in ``log h``; the minimizer's does not.

    The baseline frequency is the best single ``k`` on the coarsest grid.
    ``results`` may supply already computed minimizers keyed by grid size.
    """
    k = default_k_set(nk)
    sizes = (n, 2 * n, 4 * n)
    grids = {m: measure_grid(sol, m) for m in sizes}
    coarse = [eval_Finfty(single_frequency_measure(sol, grids[n], k, j), sol).total for j in range(k.size)]
    j0 = int(np.argmin(coarse))
    single = [eval_Finfty(single_frequency_measure(sol, grids[m], k, j0), sol).total for m in sizes]
    logh = np.log([(sol.R0 - sol.cfg.R_in) / m for m in sizes])
    slope, intercept = np.polyfit(logh, single, 1)
    fit = slope * logh + intercept
    ss_res = float(np.sum((np.asarray(single) - fit) ** 2))
    ss_tot = float(np.sum((np.asarray(single) - np.mean(single)) ** 2))
    r2 = 1 - ss_res / ss_tot
    results = dict(results or {})
    opt = []
    for m in sizes[1:]:
        if m not in results:
            results[m] = minimize_Finfty(sol, grids[m], k)
        opt.append(results[m].value.total)
    change = abs(opt[1] - opt[0]) / opt[0]
    ok = r2 > _tol(tolerances, "log_fit_r2") and slope < 0 and change < _tol(tolerances, "grid_stability")
    summary = (f"single k={k[j0]:.3f}: " + ", ".join(f"{v:.4f}" for v in single)
               + f" (R^2={r2:.5f}); optimized {opt[0]:.5f} -> {opt[1]:.5f} ({change:.2%})")
    return CheckResult("log divergence vs boundedness", ok,
                       dict(k=float(k[j0]), single=single, increments=np.diff(single).tolist(), r2=r2,
                            optimized=opt, relative_change=change), summary)


# 8 -------------------------------------------------------------------------------------------
def check_gamma_limsup(sol: RelaxedSolution, mu: FrequencyMeasure, schedule=DEFAULT_SCHEDULE,
                       rows=None, tolerances=None) -> CheckResult:
    """Limsup table: vanishing terms, exact constraint, energy gap and measure convergence."""
    rows = rows if rows is not None else run_gamma_limsup(mu, sol, schedule)
    gaps = [row.relative_gap for row in rows]
    disc = [row.discrepancy for row in rows]
    zero_terms = all(terms_vanish(row) for row in rows)
    constraint = max(row.constraint_defect for row in rows)
    last = slice(-3, None)
    gap_ok = abs(gaps[-1]) < _tol(tolerances, "gamma_gap") and all(np.diff(gaps[last]) < 0)
    disc_ok = all(np.diff(disc[last]) < 0)
    parts = {"a": zero_terms, "b": constraint < 1e-12, "c": gap_ok, "d": disc_ok}
    ok = len(rows) >= 4 and all(parts.values())
    summary = ("gaps " + ", ".join(f"{g:.3f}" for g in gaps) + "; discrepancy "
               + ", ".join(f"{d:.4f}" for d in disc) + "; "
               + " ".join(f"({k}) {'ok' if v else 'FAILED'}" for k, v in parts.items()))
    return CheckResult("Gamma-limsup certificate", ok,
                       dict(L=[row.params.L for row in rows], gaps=gaps, discrepancy=disc, parts=parts,
                            totals=[row.total for row in rows], max_constraint_defect=constraint), summary)


# 9 -------------------------------------------------------------------------------------------
def check_recovery_bounds(sol: RelaxedSolution, mu: FrequencyMeasure, schedule=DEFAULT_SCHEDULE,
                          tolerances=None) -> CheckResult:
    """Periodicity defects and the kernel derivative bound at every ``L``."""
    per, ker = [], []
    for L in schedule:
        rec = construct_recovery(mu, sol, L, tol=_tol(tolerances, "periodicity"))
        per.append(rec.periodicity_defect)
        ker.append(rec.kernel_excess)
    ok = max(per) <= _tol(tolerances, "periodicity") and max(ker) <= _tol(tolerances, "kernel")
    summary = f"max periodicity defect {max(per):.1e}, max(|a'| - a/eps) {max(ker):.1e}"
    return CheckResult("recovery periodicity and kernel bound", ok,
                       dict(L=list(schedule), periodicity=per, kernel_excess=ker), summary)


def run_all(cfg: LameConfig, tolerances=None, schedule=DEFAULT_SCHEDULE, nr: int = 200, nk: int = 64,
            relaxed_nodes: int = 2048, energy_nr: int = 2048, theta_count: int = 256,
            seed: int = 0) -> list[CheckResult]:
    """All nine checks on one configuration, sharing the expensive minimizations."""
    sol = solve_free_boundary(cfg)
    seeds = (seed, seed + 1, seed + 2)
    out = [
        check_relaxed_oracle(cfg, relaxed_nodes, tolerances),
        check_el_order(cfg, tolerances=tolerances),
        check_plancherel(sol, seeds, tolerances=tolerances),
        check_excess_identity(sol, seeds, energy_nr, theta_count, tolerances=tolerances),
        check_finfty_structure(sol, seed=seed, tolerances=tolerances),
    ]
    result = minimize_Finfty(sol, measure_grid(sol, nr), default_k_set(nk))
    out.append(check_minimizer(sol, result, tolerances=tolerances))
    out.append(check_log_divergence(sol, nr, nk, tolerances=tolerances))
    out.append(check_gamma_limsup(sol, result.mu, schedule, tolerances=tolerances))
    out.append(check_recovery_bounds(sol, result.mu, schedule, tolerances=tolerances))
    return out
