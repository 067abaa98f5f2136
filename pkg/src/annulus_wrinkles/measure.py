"""Frequency measures and the limiting functional ``F_inf``.

A measure is stored through its density ``b(r_i, k_j) >= 0`` with respect to
``dr x counting measure in k`` on a radial grid inside ``(R_in, R0)``. The
functional is

    F_inf(mu) = pi sum_k int [ u*'/(4 k^2) (d_r b)^2 / b + k^2 / r^4 b ] r dr,

whose first part is a perspective (Benamou-Brenier) functional. It is discretized
over adjacent node pairs,

    (d_r b)^2 / b  ->  (b_{i+1} - b_i)^2 / (dr^2 (b_i + b_{i+1}) / 2),

which keeps the discrete objective a sum of jointly convex, 1-homogeneous terms.
The pair between the last node and ``R0`` uses the boundary value ``b(R0) = 0``
forced by the marginal constraint.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError, InvalidMeasureError
from .fourier import FourierField
from .grids import RadialGrid, d_dr
from .relaxed import RelaxedSolution

log = logging.getLogger(__name__)

PERSPECTIVE_FLOOR = 1e-12
DERIVATIVE_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class FrequencyMeasure:
    """Density ``b(r, k)`` of a measure on ``(R_in, R0) x (0, inf)``.

    Parameters
    ----------
    r_grid : RadialGrid
        Nodes inside ``(R_in, R0)``; ``r_grid.upper`` is taken as ``R0``.
    k_set : ndarray, shape (nk,)
        Strictly increasing positive frequencies.
    b : ndarray, shape (nr, nk)
        Nonnegative densities.
    db_dr : ndarray, optional
        Radial derivative view; forward differences with ``b(R0) = 0`` when absent.
    """

    r_grid: RadialGrid
    k_set: np.ndarray
    b: np.ndarray
    db_dr_table: np.ndarray | None = None

    def __post_init__(self):
        k = np.asarray(self.k_set, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if k.ndim != 1 or k.size == 0 or np.any(k <= 0) or np.any(np.diff(k) <= 0):
            raise InvalidMeasureError("k_set must be strictly increasing and positive")
        if b.shape != (self.r_grid.size, k.size):
            raise InvalidMeasureError(f"b has shape {b.shape}, expected {(self.r_grid.size, k.size)}")
        if not np.all(np.isfinite(b)):
            raise InvalidMeasureError("b contains non-finite values")
        if np.any(b < 0):
            raise InvalidMeasureError(f"b has negative entries (min {b.min():.3e})")
        object.__setattr__(self, "k_set", k)
        object.__setattr__(self, "b", b)

    @property
    def r(self) -> np.ndarray:
        return self.r_grid.nodes

    @property
    def db_dr(self) -> np.ndarray:
        if self.db_dr_table is not None:
            return self.db_dr_table
        r = self.r_grid.nodes
        ext = np.vstack([self.b, np.zeros((1, self.k_set.size))])
        nodes = np.append(r, self.r_grid.upper)
        if nodes[-1] <= r[-1]:
            ext, nodes = self.b, r
        d = np.diff(ext, axis=0) / np.diff(nodes)[:, None]
        if d.shape[0] < r.size:
            d = np.vstack([d, d[-1:]])
        return d

    def cell_widths(self) -> np.ndarray:
        """Widths of the cells ``[edge_i, edge_{i+1}]`` around each node."""
        r = self.r_grid.nodes
        edges = np.concatenate([[self.r_grid.lower], 0.5 * (r[1:] + r[:-1]), [self.r_grid.upper]])
        return np.diff(edges)

    def marginal(self) -> np.ndarray:
        """``sum_k b(r, k)`` at every node."""
        return self.b.sum(axis=1)

    def k_marginal(self) -> np.ndarray:
        """Mass per frequency, ``int b(r, k) dr``."""
        return self.cell_widths() @ self.b

    def total_mass(self) -> float:
        return float(self.k_marginal().sum())

    def scaled(self, t: float) -> "FrequencyMeasure":
        return FrequencyMeasure(self.r_grid, self.k_set, t * self.b)

    def constraint_residual(self, sol: RelaxedSolution) -> float:
        """Max over nodes of ``|sum_k b - (-2 r u*)|``."""
        return float(np.max(np.abs(self.marginal() - constraint_profile(sol, self.r_grid))))


def constraint_profile(sol: RelaxedSolution, r_grid: RadialGrid) -> np.ndarray:
    """Excess arclength ``-2 r u*(r)`` on the grid (raises if any node is taut)."""
    r = r_grid.nodes
    c = -2.0 * r * sol.ustar(r)
    if np.any(r >= sol.R0) or np.any(c < 0):
        raise DomainError("the constraint profile is only defined inside (R_in, R0)")
    return c


def measure_grid(sol: RelaxedSolution, n: int) -> RadialGrid:
    """Cell-centred grid on ``(R_in, R0)``; ``R0`` itself is not a node."""
    return RadialGrid.cell_centered(sol.cfg.R_in, sol.R0, n)


def default_k_set(
    n: int = 64,
    k_min: float = 1.0,
    k_max: float = 40.0,
    n_geometric: int | None = None,
) -> np.ndarray:
    """Geometric-plus-uniform frequency set.

    ``n_geometric`` points ``k_min rho^j`` followed by ``n - n_geometric`` equally
    spaced points whose step equals the last geometric gap, ending at ``k_max``.
    ``rho`` is chosen so that the two pieces join smoothly. The default puts
    three quarters of the points in the geometric part (48 of 64).
    """
    if n_geometric is None:
        n_geometric = max(2, (3 * n) // 4)
    if not 2 <= n_geometric <= n or not 0 < k_min < k_max:
        raise ValueError("need 2 <= n_geometric <= n and 0 < k_min < k_max")
    n_tail = n - n_geometric
    if n_tail == 0:
        return np.geomspace(k_min, k_max, n)

    def end_mismatch(g):
        rho = (g / k_min) ** (1.0 / (n_geometric - 1))
        return g * (1 + n_tail * (1 - 1 / rho)) - k_max

    g = brentq(end_mismatch, k_min * (1 + 1e-9), k_max)
    geo = np.geomspace(k_min, g, n_geometric)
    step = geo[-1] - geo[-2]
    tail = g + step * np.arange(1, n_tail + 1)
    tail[-1] = k_max
    return np.concatenate([geo, tail])


def single_frequency_measure(sol: RelaxedSolution, r_grid: RadialGrid, k_set: np.ndarray, index: int) -> FrequencyMeasure:
    """Feasible baseline putting the whole profile on ``k_set[index]``."""
    b = np.zeros((r_grid.size, len(k_set)))
    b[:, index] = constraint_profile(sol, r_grid)
    return FrequencyMeasure(r_grid, np.asarray(k_set, float), b)


class FinftyOperator:
    """Discrete ``F_inf`` on a fixed radial grid and frequency set.

    Precomputes the pair weights ``pi u*'(r_m) r_m / (4 k^2 dr)`` at pair midpoints,
    the boundary pair weight towards ``R0`` and the bending weights
    ``pi k^2 / r^3`` times the cell widths.
    """

    def __init__(self, sol: RelaxedSolution, r_grid: RadialGrid, k_set: np.ndarray):
        self.sol = sol
        self.r_grid = r_grid
        self.k = np.asarray(k_set, dtype=float)
        r = r_grid.nodes
        k2 = self.k**2
        dr = np.diff(r)
        rm = 0.5 * (r[1:] + r[:-1])
        self.w_pair = (np.pi * sol.ustar_prime(rm) * rm / dr)[:, None] / (4 * k2)[None, :]
        self.dr = dr
        gap = r_grid.upper - r[-1]
        if gap > 1e-14 * r_grid.upper:
            re = r[-1] + 0.5 * gap
            self.w_edge = np.pi * sol.ustar_prime(re) * re / gap / (4 * k2)
        else:
            self.w_edge = None
        edges = np.concatenate([[r_grid.lower], rm, [r_grid.upper]])
        self.widths = np.diff(edges)
        self.w_bend = (np.pi * self.widths / r**3)[:, None] * k2[None, :]
        self.profile = -2.0 * r * sol.ustar(r)
        # floor for the perspective at pair midpoints, relative to the profile
        self._pair_floor = PERSPECTIVE_FLOOR * 0.5 * (self.profile[1:] + self.profile[:-1])

    def _pairs(self, b):
        x, y = b[:-1], b[1:]
        s = x + y
        d = x - y
        with np.errstate(divide="ignore", invalid="ignore"):
            val = 2.0 * d * d / s
        negligible = (0.5 * s < self._pair_floor[:, None]) & (np.abs(d) < DERIVATIVE_FLOOR * self.dr[:, None])
        val = np.where((s > 0) & ~negligible, val, 0.0)
        return val, s, d, negligible

    def split(self, b: np.ndarray) -> tuple[float, float]:
        """Return ``(stretching, bending)``."""
        val, *_ = self._pairs(b)
        stretch = float(np.sum(self.w_pair * val))
        if self.w_edge is not None:
            stretch += float(np.sum(2.0 * self.w_edge * b[-1]))
        bend = float(np.sum(self.w_bend * b))
        return stretch, bend

    def value(self, b: np.ndarray) -> float:
        s, bnd = self.split(b)
        return s + bnd

    def stretch_per_k(self, b: np.ndarray) -> np.ndarray:
        val, *_ = self._pairs(b)
        out = np.sum(self.w_pair * val, axis=0)
        if self.w_edge is not None:
            out = out + 2.0 * self.w_edge * b[-1]
        return out

    def bend_per_k(self, b: np.ndarray) -> np.ndarray:
        return np.sum(self.w_bend * b, axis=0)

    def gradient(self, b: np.ndarray) -> np.ndarray:
        """Gradient of the discrete objective (0 on pairs with ``b_i = b_{i+1} = 0``)."""
        _, s, d, negligible = self._pairs(b)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(s > 0, d / s, 0.0)
        t = np.where(negligible, 0.0, t)
        g = self.w_bend.copy()
        g[:-1] += self.w_pair * (4 * t - 2 * t * t)
        g[1:] += self.w_pair * (-4 * t - 2 * t * t)
        if self.w_edge is not None:
            g[-1] += 2.0 * self.w_edge
        return g


@dataclass(frozen=True)
class FinftyValue:
    """``F_inf`` with its stretching (Benamou-Brenier) and bending parts."""

    total: float
    stretching: float
    bending: float

    def as_dict(self) -> dict:
        return {"total": self.total, "stretching": self.stretching, "bending": self.bending}


def eval_Finfty(mu: FrequencyMeasure, sol: RelaxedSolution) -> FinftyValue:
    """Evaluate the discrete ``F_inf``; the marginal constraint is not enforced."""
    if mu.r_grid.nodes[0] <= sol.cfg.R_in * (1 - 1e-14) - 1e-14 or mu.r_grid.nodes[-1] >= sol.R0:
        raise DomainError("measure nodes must lie inside [R_in, R0)")
    op = FinftyOperator(sol, mu.r_grid, mu.k_set)
    s, bnd = op.split(mu.b)
    return FinftyValue(s + bnd, s, bnd)


def finfty_gradient(mu: FrequencyMeasure, sol: RelaxedSolution) -> np.ndarray:
    """Gradient of the discrete ``F_inf`` with respect to ``b``."""
    return FinftyOperator(sol, mu.r_grid, mu.k_set).gradient(mu.b)


def project_simplex_rows(v: np.ndarray, totals: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto ``{x >= 0, sum x = total}`` (sort-based)."""
    v = np.asarray(v, dtype=float)
    totals = np.asarray(totals, dtype=float)
    n = v.shape[1]
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - totals[:, None]
    idx = np.arange(1, n + 1)
    cond = u - css / idx > 0
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    tau = css[np.arange(v.shape[0]), rho] / (rho + 1)
    return np.maximum(v - tau[:, None], 0.0)


def project_constraint(mu: FrequencyMeasure, sol: RelaxedSolution) -> FrequencyMeasure:
    """Project every radial slice onto ``{b >= 0, sum_k b = -2 r u*}``.

    Feasible slices are returned unchanged, so the map is idempotent.
    """
    c = constraint_profile(sol, mu.r_grid)
    b = mu.b
    feasible = (np.abs(b.sum(axis=1) - c) <= 1e-14 * np.maximum(c, 1.0)) & np.all(b >= 0, axis=1)
    out = b.copy()
    rows = ~feasible
    if np.any(rows):
        out[rows] = project_simplex_rows(b[rows], c[rows])
    return FrequencyMeasure(mu.r_grid, mu.k_set, out)


@dataclass
class MinimizeOptions:
    """Controls for :func:`minimize_Finfty`.

    method : ``"conic"`` solves the second-order cone reformulation with an
        interior-point method and polishes the result; ``"apg"`` runs monotone
        accelerated projected gradient with adaptive restart.
    """

    method: str = "conic"
    tol: float = 1e-9
    max_iter: int = 200000
    stall_window: int = 50
    stall_rtol: float = 1e-9
    pg_tol: float = 1e-6
    polish_iters: int = 200
    time_limit: float = 600.0
    verbose: bool = False


@dataclass
class MinimizeResult:
    """Minimizer of the discrete ``F_inf`` with diagnostics.

    ``dual_bound`` is a certified lower bound on the discrete minimum when the conic
    method is used (``nan`` otherwise); ``certified_gap`` is
    ``(value - dual_bound) / value``.
    """

    mu: FrequencyMeasure
    value: FinftyValue
    trace: list
    iterations: int
    status: str
    method: str
    constraint_residual: float
    projected_grad_norm: float
    dual_bound: float = float("nan")
    certified_gap: float = float("nan")
    runtime: float = 0.0
    extra: dict = field(default_factory=dict)


def _projected_gradient_norm(op: FinftyOperator, b: np.ndarray) -> float:
    # scale-free stationarity measure: per-row spread of the gradient over the support
    g = op.gradient(b)
    active = b > 1e-12 * op.profile[:, None]
    gmin = g.min(axis=1)
    gmax_active = np.where(active, g, -np.inf).max(axis=1)
    viol = np.maximum(gmax_active - gmin, 0.0)
    scale = np.abs(g).max()
    return float(np.max(viol * op.profile) / (scale * op.profile.max())) if scale > 0 else 0.0


def _solve_apg(op: FinftyOperator, b0: np.ndarray, opts: MinimizeOptions, t_start: float):
    c = op.profile
    x = b0
    fx = op.value(x)
    y = x.copy()
    t = 1.0
    lip = 1.0
    trace = [fx]
    it = 0
    pg = np.inf
    for it in range(1, opts.max_iter + 1):
        gy = op.gradient(y)
        fy = op.value(y)
        while True:
            z = project_simplex_rows(y - gy / lip, c)
            fz = op.value(z)
            dz = z - y
            if fz <= fy + np.sum(gy * dz) + 0.5 * lip * np.sum(dz * dz) + 1e-14 * abs(fy):
                break
            lip *= 2.0
        if fz <= fx:
            x_new, f_new = z, fz
        else:
            x_new, f_new = x, fx
        restart = fz > fx or np.sum((z - x) * (x - y)) > 0
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        if restart:
            y, t_new = x_new.copy(), 1.0
        else:
            y = x_new + ((t - 1) / t_new) * (x_new - x) + (t / t_new) * (z - x_new)
        x, fx, t = x_new, f_new, t_new
        lip *= 0.9
        trace.append(fx)
        if it > opts.stall_window:
            old = trace[-1 - opts.stall_window]
            stalled = (old - fx) <= opts.stall_rtol * abs(fx)
            if stalled:
                pg = _projected_gradient_norm(op, x)
                if pg <= opts.pg_tol:
                    return x, trace, it, "converged", pg
        if time.perf_counter() - t_start > opts.time_limit:
            break
    pg = _projected_gradient_norm(op, x)
    raise ConvergenceError(f"F_inf minimization stopped after {it} iterations", trace, pg)


def _conic_problem(op: FinftyOperator):
    """Second-order cone form in scaled variables ``p = b / c``.

    For each interior pair the epigraph variable ``tau`` (with ``t = c_m tau``)
    satisfies ``|(2 (y - x), tau - s)| <= tau + s`` where ``x, y`` are the scaled
    neighbours and ``s = (x + y) / 2``; this is ``tau s >= (x - y)^2``.
    """
    nr, nk = op.w_bend.shape
    c = op.profile
    N = nr * nk
    npair = (nr - 1) * nk
    nv = N + npair
    cm = 0.5 * (c[1:] + c[:-1])
    q = np.zeros(nv)
    q_p = (op.w_bend * c[:, None]).copy()
    if op.w_edge is not None:
        q_p[-1] += 2.0 * op.w_edge * c[-1]
    q[:N] = q_p.ravel()
    q[N:] = (op.w_pair * cm[:, None]).ravel()  # w (b_i - b_j)^2 / avg = w c_m tau at the optimum

    pidx = np.arange(N).reshape(nr, nk)
    ii = pidx[:-1].ravel()
    jj = pidx[1:].ravel()
    ax = np.repeat(c[:-1] / cm, nk)
    ay = np.repeat(c[1:] / cm, nk)
    tidx = N + np.arange(npair)

    rows, cols, vals = [], [], []
    # equality rows: sum_k p = 1
    rows.append(np.repeat(np.arange(nr), nk))
    cols.append(np.arange(N))
    vals.append(np.ones(N))
    r0 = nr
    # nonnegativity of p
    rows.append(r0 + np.arange(N))
    cols.append(np.arange(N))
    vals.append(-np.ones(N))
    r0 += N
    base = r0 + 3 * np.arange(npair)
    # s0 = tau + (x + y)/2
    rows += [base, base, base]
    cols += [tidx, ii, jj]
    vals += [-np.ones(npair), -0.5 * ax, -0.5 * ay]
    # s1 = 2 (y - x)
    rows += [base + 1, base + 1]
    cols += [jj, ii]
    vals += [-2.0 * ay, 2.0 * ax]
    # s2 = tau - (x + y)/2
    rows += [base + 2, base + 2, base + 2]
    cols += [tidx, ii, jj]
    vals += [-np.ones(npair), 0.5 * ax, 0.5 * ay]
    m = r0 + 3 * npair
    A = sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, nv)
    )
    bvec = np.zeros(m)
    bvec[:nr] = 1.0
    return q, A, bvec, N, npair


def _solve_conic(op: FinftyOperator, opts: MinimizeOptions):
    import clarabel

    q, A, bvec, N, npair = _conic_problem(op)
    nr = op.profile.size
    cones = [clarabel.ZeroConeT(nr), clarabel.NonnegativeConeT(N)] + [clarabel.SecondOrderConeT(3)] * npair
    settings = clarabel.DefaultSettings()
    settings.verbose = opts.verbose
    settings.tol_gap_abs = 1e-10
    settings.tol_gap_rel = 1e-10
    settings.tol_feas = 1e-10
    settings.max_iter = 400
    settings.time_limit = opts.time_limit
    P = sp.csc_matrix((q.size, q.size))
    solver = clarabel.DefaultSolver(P, q, A, bvec, cones, settings)
    sol = solver.solve()
    status = str(sol.status)
    p = np.asarray(sol.x[:N]).reshape(op.w_bend.shape)
    return p, status, float(sol.obj_val), float(sol.obj_val_dual), int(sol.iterations)


def _polish(op: FinftyOperator, b: np.ndarray, iters: int) -> tuple[np.ndarray, list]:
    """Monotone projected-gradient steps with backtracking."""
    c = op.profile
    f = op.value(b)
    trace = [f]
    lip = 1.0
    for _ in range(iters):
        g = op.gradient(b)
        accepted = False
        for _ in range(60):
            z = project_simplex_rows(b - g / lip, c)
            fz = op.value(z)
            dz = z - b
            if fz <= f + np.sum(g * dz) + 0.5 * lip * np.sum(dz * dz):
                accepted = True
                break
            lip *= 4.0
        if not accepted or fz >= f:
            break
        b, f = z, fz
        trace.append(f)
        lip *= 0.5
    return b, trace


def minimize_Finfty(
    sol: RelaxedSolution,
    r_grid: RadialGrid,
    k_set: np.ndarray,
    opts: MinimizeOptions | None = None,
) -> MinimizeResult:
    """Minimize the discrete ``F_inf`` under the marginal constraint.

    Parameters
    ----------
    sol : RelaxedSolution
    r_grid : RadialGrid
        Nodes inside ``(R_in, R0)``, usually :func:`measure_grid`.
    k_set : array_like
        Positive frequencies; sorted internally, so the result does not depend on
        their order.
    opts : MinimizeOptions, optional

    Returns
    -------
    MinimizeResult
        The feasible minimizer (each slice projected exactly onto its simplex),
        the objective split, the trace and stationarity diagnostics.

    Raises
    ------
    ConvergenceError
        Budget exhausted (``apg``) or the interior-point solver failed to reach a
        usable point (``conic``).
    """
    opts = opts or MinimizeOptions()
    k = np.sort(np.asarray(k_set, dtype=float))
    if k.size == 0 or k[0] <= 0 or np.any(np.diff(k) <= 0):
        raise InvalidMeasureError("k_set must contain distinct positive frequencies")
    t0 = time.perf_counter()
    op = FinftyOperator(sol, r_grid, k)
    c = constraint_profile(sol, r_grid)
    extra = {}
    if opts.method == "apg":
        b0 = np.repeat((c / k.size)[:, None], k.size, axis=1)
        b, trace, iters, status, pg = _solve_apg(op, b0, opts, t0)
        dual = float("nan")
    elif opts.method == "conic":
        p, status, primal, dual, iters = _solve_conic(op, opts)
        if not np.all(np.isfinite(p)) or status not in ("Solved", "AlmostSolved"):
            raise ConvergenceError(f"interior-point solver returned {status}", [primal], None)
        b = project_simplex_rows(np.maximum(p, 0.0) * c[:, None], c)
        extra["interior_point_value"] = primal
        b, trace = _polish(op, b, opts.polish_iters)
        pg = _projected_gradient_norm(op, b)
    else:
        raise ValueError(f"unknown method {opts.method!r}")
    mu = FrequencyMeasure(r_grid, k, b)
    s, bnd = op.split(b)
    value = FinftyValue(s + bnd, s, bnd)
    gap = (value.total - dual) / abs(value.total) if np.isfinite(dual) else float("nan")
    log.info("F_inf minimum %.8f (status %s, gap %.2e)", value.total, status, gap)
    return MinimizeResult(
        mu=mu,
        value=value,
        trace=trace,
        iterations=iters,
        status=status,
        method=opts.method,
        constraint_residual=mu.constraint_residual(sol),
        projected_grad_norm=pg,
        dual_bound=dual,
        certified_gap=gap,
        runtime=time.perf_counter() - t0,
        extra=extra,
    )


@dataclass(frozen=True)
class EquipartitionReport:
    """Bending versus stretching, per frequency and in total.

    ``per_k_bending[j]`` and ``per_k_stretching[j]`` are the fiber integrals for the
    normalized slice ``g_k = b(., k) / m_k`` (``m_k`` the marginal mass), divided by
    ``pi``; ``totals`` are ``sum_k m_k x`` those, i.e. the global integrals over
    ``pi``. Fibers with zero mass carry ``nan`` and are listed in ``skipped``.
    """

    k_set: np.ndarray
    marginal_mass: np.ndarray
    per_k_bending: np.ndarray
    per_k_stretching: np.ndarray
    per_k_gap: np.ndarray
    bending_total: float
    stretching_total: float
    global_gap: float
    skipped: tuple


def equipartition_report(mu: FrequencyMeasure, sol: RelaxedSolution, mass_rtol: float = 1e-9) -> EquipartitionReport:
    """Equipartition diagnostics for a (near) minimizer."""
    op = FinftyOperator(sol, mu.r_grid, mu.k_set)
    mass = mu.k_marginal()
    total = mass.sum()
    if total <= 0:
        raise InvalidMeasureError("equipartition needs a measure with positive mass")
    bend = op.bend_per_k(mu.b) / np.pi
    stretch = op.stretch_per_k(mu.b) / np.pi
    live = mass > mass_rtol * total
    with np.errstate(divide="ignore", invalid="ignore"):
        pb = np.where(live, bend / mass, np.nan)
        ps = np.where(live, stretch / mass, np.nan)
        gap_k = np.abs(pb - ps) / (pb + ps)
    skipped = tuple(float(k) for k in mu.k_set[~live])
    if skipped:
        log.info("equipartition: %d zero-mass fibers skipped", len(skipped))
    B, S = float(bend.sum()), float(stretch.sum())
    return EquipartitionReport(mu.k_set, mass, pb, ps, gap_k, B, S, abs(B - S) / (B + S), skipped)


def smallk_mass(mu: FrequencyMeasure, C: float) -> float:
    """Mass of ``mu`` on frequencies ``k < C``."""
    if C <= 0:
        raise ValueError("threshold must be positive")
    return float(mu.k_marginal()[mu.k_set < C].sum())


@dataclass(frozen=True)
class SmallKReport:
    """Largest threshold ``C`` (a point of ``k_set``) with negligible mass below it."""

    threshold: float
    mass_fraction_below: float
    rtol: float
    trivial: bool  # True if the threshold is the smallest frequency (nothing below it)
    sweep: tuple  # (C, mass fraction below C) for every C in k_set


def smallk_threshold(mu: FrequencyMeasure, rtol: float = 1e-6) -> SmallKReport:
    """Sweep ``C`` over ``k_set`` and report the largest mass-free threshold."""
    mass = mu.k_marginal()
    total = mass.sum()
    below = np.concatenate([[0.0], np.cumsum(mass)[:-1]]) / total
    sweep = tuple(zip(mu.k_set.tolist(), below.tolist()))
    ok = np.nonzero(below <= rtol)[0]
    j = int(ok[-1])
    return SmallKReport(float(mu.k_set[j]), float(below[j]), rtol, j == 0, sweep)


def k_discretize(mu: FrequencyMeasure, L0: float) -> FrequencyMeasure:
    """Bin the mass of every slice into ``(k - 1/L0, k]`` for ``k`` in ``Z / L0``.

    Each frequency moves to the right end of its bin, so slice totals (and thus the
    marginal constraint) are preserved exactly up to summation order. Bending grows
    by at most ``(1 + 1 / (L0 k_min))^2``; stretching does not increase because the
    perspective is subadditive and its weight decreases in ``k``.
    """
    if L0 <= 0:
        raise ValueError("L0 must be positive")
    j = np.ceil(mu.k_set * L0 - 1e-9).astype(int)
    j = np.maximum(j, 1)
    uniq, inverse = np.unique(j, return_inverse=True)
    b = np.zeros((mu.r_grid.size, uniq.size))
    for col in range(mu.k_set.size):
        b[:, inverse[col]] += mu.b[:, col]
    return FrequencyMeasure(mu.r_grid, uniq / L0, b)


def k_discretize_bound(k_min: float, L0: float) -> float:
    """Upper bound ``(1 + 1/(L0 k_min))^2`` on ``F_inf(binned) / F_inf``."""
    return (1.0 + 1.0 / (L0 * k_min)) ** 2


def measure_from_field(ff: FourierField, sol: RelaxedSolution) -> FrequencyMeasure:
    """``b(r, k) = k^2 a_k(r)^2`` with ``+-k`` folded, restricted to ``r < R0``.

    ``db_dr`` is the central-difference derivative of ``b`` on the field grid.
    """
    if ff.r_grid is None:
        raise DomainError("measure_from_field needs the radial grid of the coefficients")
    r = ff.r_grid.nodes
    inside = r < sol.R0
    if inside.sum() < 2:
        raise DomainError("fewer than two field nodes inside (R_in, R0)")
    m = ff.harmonics
    kabs = np.abs(ff.k_set)
    positive = np.unique(np.abs(m[m != 0]))
    b = np.zeros((int(inside.sum()), positive.size))
    a2 = ff.coeffs[inside] ** 2
    col = np.searchsorted(positive, np.abs(m))
    for j in range(m.size):
        if m[j] == 0:
            continue
        b[:, col[j]] += kabs[j] ** 2 * a2[:, j]
    grid = RadialGrid(r[inside], ff.r_grid.lower, sol.R0)
    k = 2 * np.pi * positive / ff.period
    deriv = d_dr(b, grid.nodes, axis=0)
    return FrequencyMeasure(grid, k, b, deriv)


def with_b(mu: FrequencyMeasure, b: np.ndarray) -> FrequencyMeasure:
    """Copy of ``mu`` with new densities."""
    return replace(mu, b=b, db_dr_table=None)
