"""Recovery sequence for a target frequency measure.

Given a feasible measure ``mu`` on ``(R_in, R0)`` the construction produces, for
each ``L``, a triple ``(u_r, u_theta, xi)`` periodic in the rescaled angle with
``F_L`` close to ``F_inf(mu)``:

1. bin the frequencies onto ``Z / L0`` (:func:`~annulus_wrinkles.measure.k_discretize`);
2. extend the binned densities to the whole line by a dilation near ``R_in``
   (:func:`extend_density`) and mollify with the exponential kernel;
3. synthesize ``xi_hat = sum_k sqrt(a_k) / k sqrt(2) sin(k theta)``, correct its
   amplitude by ``f = sqrt(-r u* / A)`` and cut it off before ``R0``;
4. build ``u_theta`` and ``u_r`` so that the hoop and shear terms are in balance.

Every radial derivative is propagated analytically, so the shear term vanishes
to round-off and the arclength constraint holds exactly on the lattice.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .energy import DisplacementField, EnergyBreakdown, eval_FL
from .errors import ConstructionError, ParameterError
from .fourier import fourier_forward, synthesize_sine, theta_antiderivative, theta_derivative
from .grids import RadialGrid, trapezoid
from .measure import FrequencyMeasure, eval_Finfty, k_discretize, measure_from_field
from .mollify import PiecewiseLinear, exp_mollify
from .relaxed import RelaxedSolution

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RecoveryParams:
    """Coupled scales of the construction.

    ``eps = L^(-2/3) M^(7/8)``, ``delta = eps / M`` and ``L0 = L / n`` with
    ``L0`` in ``[M^(1/8), 2 M^(1/8))``.
    """

    L: float
    M: int
    eps: float
    delta: float
    n: int
    L0: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def default_M(L: float) -> int:
    """Staircase ``M(L) = floor(L^(1/4))``."""
    return int(math.floor(L**0.25 * (1 + 1e-15)))


def schedule(L: float, M: int | None = None) -> RecoveryParams:
    """Parameters for scale ``L``.

    ``n`` is the smallest integer with ``L / n < 2 M^(1/8)``, which puts ``L0`` at
    the top of its admissible window.

    Raises
    ------
    ParameterError
        ``M < 2`` or ``L0 < 2``.
    """
    if not (isinstance(L, (int, float)) and math.isfinite(L) and L > 0):
        raise ParameterError(f"L must be a finite positive number, got {L!r}")
    M = default_M(L) if M is None else int(M)
    if M < 2:
        raise ParameterError(f"L={L:g} gives M={M} < 2")
    c = M ** 0.125
    n = int(math.floor(L / (2 * c))) + 1
    while L / n >= 2 * c:  # round-off in the floor for very large L
        n += 1
    L0 = L / n
    if L0 < c:
        raise ParameterError(f"L={L:g} too small for the period window [{c:.3f}, {2 * c:.3f})")
    if L0 < 2:
        raise ParameterError(f"L={L:g} gives L0={L0:.3f} < 2")
    eps = L ** (-2.0 / 3.0) * M ** 0.875
    return RecoveryParams(float(L), M, eps, eps / M, n, L0)


def min_schedule_L() -> float:
    """Smallest ``L`` accepted by :func:`schedule` (found by bisection on a log scale)."""
    lo, hi = 1.0, 1e3
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        try:
            schedule(mid)
            hi = mid
        except ParameterError:
            lo = mid
    return hi


def select_lambda(bbar: FrequencyMeasure, eps: float) -> float:
    """Grid node in ``(R_in, R_in + sqrt(eps)/2)`` minimizing ``sum_k k^2 b(lambda, k) / lambda^3``.

    Ties go to the leftmost node.

    Raises
    ------
    ParameterError
        No node in the window, or ``eps >= (R0 - R_in)^2 / 4``.
    """
    R_in, R0 = bbar.r_grid.lower, bbar.r_grid.upper
    if eps <= 0 or eps >= (R0 - R_in) ** 2 / 4:
        raise ParameterError(f"eps={eps:.3e} outside (0, (R0 - R_in)^2 / 4)")
    r = bbar.r_grid.nodes
    window = (r > R_in) & (r < R_in + 0.5 * math.sqrt(eps))
    if not np.any(window):
        raise ParameterError(f"no radial node in the window (R_in, R_in + sqrt(eps)/2) for eps={eps:.3e}")
    idx = np.nonzero(window)[0]
    cost = (bbar.b[idx] @ bbar.k_set**2) / r[idx] ** 3
    return float(r[idx[int(np.argmin(cost))]])


@dataclass(frozen=True)
class Extension:
    """Extended densities and the geometry of the dilation."""

    density: PiecewiseLinear
    lam: float
    r_eps: float
    m_eps: float
    M0: float


def _bbar_function(bbar: FrequencyMeasure) -> PiecewiseLinear:
    # flat on [R_in, r_0], linear between nodes, linear to 0 at R0
    x = np.append(bbar.r_grid.nodes, bbar.r_grid.upper)
    y = np.vstack([bbar.b, np.zeros((1, bbar.k_set.size))])
    return PiecewiseLinear(x, y)


def extend_density(bbar: FrequencyMeasure, lam: float, eps: float) -> Extension:
    """Extend ``bbar`` from ``(R_in, R0)`` to the real line.

    With ``M0 = (R_in + R0) / 2``, ``m_eps = (R0 - R_in + 2 sqrt(eps)) / (R0 - R_in)``
    and the dilation ``l(r) = m_eps (r - M0) + M0`` the extension is ``bbar(lam)``
    left of ``r_eps = l(lam)``, ``bbar(l^{-1}(r))`` on ``(r_eps, M0]``, ``bbar(r)`` on
    ``[M0, R0)`` and 0 from ``R0`` on.
    """
    R_in, R0 = bbar.r_grid.lower, bbar.r_grid.upper
    M0 = 0.5 * (R_in + R0)
    m_eps = (R0 - R_in + 2 * math.sqrt(eps)) / (R0 - R_in)

    def ell(s):
        return m_eps * (s - M0) + M0

    base = _bbar_function(bbar)
    nodes = bbar.r_grid.nodes
    left_nodes = nodes[(nodes > lam) & (nodes < M0)]
    right_nodes = nodes[nodes > M0]
    x = np.concatenate([[ell(lam)], ell(left_nodes), [M0], right_nodes, [R0]])
    src = np.concatenate([[lam], left_nodes, [M0], right_nodes, [R0]])
    y = base(src)
    y[-1] = 0.0
    keep = np.concatenate([[True], np.diff(x) > 0])
    return Extension(PiecewiseLinear(x[keep], y[keep]), lam, float(ell(lam)), m_eps, M0)


def smoothstep(t: np.ndarray):
    """``S(t) = 6t^5 - 15t^4 + 10t^3`` on ``[0, 1]`` with its first two derivatives."""
    t = np.clip(t, 0.0, 1.0)
    S = t**3 * (10 - 15 * t + 6 * t * t)
    dS = 30 * t**2 * (1 - t) ** 2
    d2S = 60 * t * (1 - t) * (1 - 2 * t)
    return S, dS, d2S


def cutoff(r: np.ndarray, R0: float, delta: float):
    """``psi = 1`` on ``(-inf, R0 - 2 delta]``, ``0`` on ``[R0 - delta, inf)``, quintic in between.

    Returns ``(psi, psi', psi'')``; ``|psi'| <= 15/(8 delta)`` and
    ``|psi''| <= 10/(sqrt(3) delta^2)``.
    """
    t = (np.asarray(r, dtype=float) - (R0 - 2 * delta)) / delta
    S, dS, d2S = smoothstep(t)
    inside = (t > 0) & (t < 1)
    return 1.0 - S, np.where(inside, -dS / delta, 0.0), np.where(inside, -d2S / delta**2, 0.0)


def recovery_grid(bbar: FrequencyMeasure, ext: Extension, params: RecoveryParams, sol: RelaxedSolution,
                  n_bulk: int | None = None, n_taut: int = 64) -> RadialGrid:
    """Radial lattice for the constructed fields.

    Uniform on ``[R_in, R0]`` (``n_bulk`` nodes), clusters of width ``~ eps``
    around every breakpoint of the extended density, geometric refinement towards
    ``R0`` with spacing ``delta / 8`` across the cutoff layer, and a coarse uniform
    part on the taut region.
    """
    R_in, R0, R_out = sol.cfg.R_in, sol.R0, sol.cfg.R_out
    eps, delta = params.eps, params.delta
    n_bulk = n_bulk or 4 * bbar.r_grid.size
    parts = [np.linspace(R_in, R0, n_bulk), np.linspace(R0, R_out, n_taut)]
    offsets = eps * np.array([-8.0, -3.0, -1.0, -0.3, 0.0, 0.3, 1.0, 3.0, 8.0])
    parts.append((ext.density.x[:, None] + offsets[None, :]).ravel())
    h = (R0 - R_in) / n_bulk
    layer = 4 * delta
    parts.append(R0 - np.geomspace(layer, 2 * h, 60))
    parts.append(np.linspace(R0 - layer, R0, 33))
    parts.append(R0 - 2 * delta + delta * np.linspace(0, 1, 17))
    nodes = np.concatenate(parts)
    nodes = nodes[(nodes >= R_in) & (nodes <= R_out)]
    nodes = np.unique(nodes)
    keep = np.concatenate([[True], np.diff(nodes) > 1e-13 * R_out])
    nodes = nodes[keep]
    nodes[0], nodes[-1] = R_in, R_out
    return RadialGrid(nodes, R_in, R_out)


@dataclass
class RecoveryFields:
    """Constructed triple with intermediates and self-checks."""

    params: RecoveryParams
    binned: FrequencyMeasure
    extension: Extension
    field: DisplacementField
    harmonics: np.ndarray
    a: np.ndarray
    da: np.ndarray
    A: np.ndarray
    f: np.ndarray
    psi: np.ndarray
    constraint_defect: float
    periodicity_defect: float
    kernel_excess: float
    f2_deviation: float
    leading_hat: float
    remainder_constant: float
    theta_count: int


def _sqrt_amplitudes(a, da, d2a):
    # (sqrt a)'' = (a'' - 2 (sqrt a)'^2) / (2 sqrt a) avoids a * sqrt(a), which
    # underflows where the mollified density is subnormal
    live = a > np.finfo(float).tiny
    s = np.sqrt(np.where(live, a, 0.0))
    safe = np.where(live, s, 1.0)
    ds = np.where(live, da / (2 * safe), 0.0)
    d2s = np.where(live, (d2a - 2 * ds * ds) / (2 * safe), 0.0)
    return s, ds, d2s


def build_xi(binned: FrequencyMeasure, ext: Extension, params: RecoveryParams, sol: RelaxedSolution,
             grid: RadialGrid, theta_count: int | None = None):
    """Mollify, synthesize ``xi_hat`` and apply the correction factor and cutoff.

    Returns a dictionary with ``xi`` and its exact radial derivatives, the
    mollified densities, ``A``, ``f``, ``psi`` and the lattice size.

    Raises
    ------
    ConstructionError
        ``A`` vanishes where the cutoff is positive.
    """
    r = grid.nodes
    eps, delta = params.eps, params.delta
    harmonics = np.rint(binned.k_set * params.L0).astype(int)
    k = harmonics / params.L0
    jmax = int(harmonics.max())
    n = theta_count or int(2 ** math.ceil(math.log2(4 * jmax + 2)))
    if n < 4 * jmax:
        raise ConstructionError(f"theta_count={n} below 4 x max harmonic {jmax}")

    mol = exp_mollify(ext.density, eps, r)
    a, da, d2a = mol.a, mol.da, mol.d2a
    A, dA, d2A = 0.5 * a.sum(1), 0.5 * da.sum(1), 0.5 * d2a.sum(1)
    psi, dpsi, d2psi = cutoff(r, sol.R0, delta)
    live = psi > 0
    if np.any(live & (A <= 0)):
        raise ConstructionError("mollified amplitude A vanishes inside the cutoff region")

    C = sol.C
    rl = r[live]
    P = -rl * sol.ustar(rl)
    dP = -C * np.log(rl / sol.R0) - C
    d2P = -C / rl
    Al, dAl, d2Al = A[live], dA[live], d2A[live]
    q = P / Al
    dq = (dP * Al - P * dAl) / Al**2
    d2q = (d2P * Al - P * d2Al) / Al**2 - 2 * dAl * (dP * Al - P * dAl) / Al**3
    f = np.zeros_like(r)
    df = np.zeros_like(r)
    d2f = np.zeros_like(r)
    fl = np.sqrt(q)
    f[live] = fl
    df[live] = dq / (2 * fl)
    d2f[live] = d2q / (2 * fl) - dq * dq / (4 * fl**3)
    g = psi * f
    dg = dpsi * f + psi * df
    d2g = d2psi * f + 2 * dpsi * df + psi * d2f

    s, ds, d2s = _sqrt_amplitudes(a, da, d2a)
    amp = s / k
    xi_hat = synthesize_sine(amp, harmonics, n)
    xi_hat_r = synthesize_sine(ds / k, harmonics, n)
    xi_hat_rr = synthesize_sine(d2s / k, harmonics, n)
    G, dG, d2G = g[:, None], dg[:, None], d2g[:, None]
    xi = G * xi_hat
    xi_r = dG * xi_hat + G * xi_hat_r
    xi_rr = d2G * xi_hat + 2 * dG * xi_hat_r + G * xi_hat_rr
    return dict(
        xi=xi, xi_r=xi_r, xi_rr=xi_rr, a=a, da=da, A=A, f=f, psi=psi, harmonics=harmonics,
        k=k, theta_count=n, amp=amp, amp_r=ds / k,
    )


def build_inplane(xi_parts: dict, params: RecoveryParams, sol: RelaxedSolution, grid: RadialGrid):
    """In-plane displacements balancing the hoop and shear terms.

    ``u_theta^0`` is minus the periodic antiderivative of the oscillating part of
    ``(d_theta xi)^2 / (2 r)``; its linear part cancels against ``-psi^2 u* theta``
    by the exact constraint. ``u_theta^1`` solves ``r u' - u = -mean(d_r xi d_theta xi)``
    with ``u(R0) = 0``. ``u_r = u* + L^-2 u_r^0`` with ``d_theta u_r^0 = -(r d_r u_theta
    - u_theta + d_r xi d_theta xi)``.

    Returns the displacement field and the two linear-drift defects.
    """
    r = grid.nodes
    R = r[:, None]
    P = 2 * np.pi * params.L0
    xi, xi_r, xi_rr = xi_parts["xi"], xi_parts["xi_r"], xi_parts["xi_rr"]
    xt = theta_derivative(xi, P, 1)
    xrt = theta_derivative(xi_r, P, 1)
    xrrt = theta_derivative(xi_rr, P, 1)

    Q = xt**2 / (2 * R)
    Q_r = xt * xrt / R - xt**2 / (2 * R**2)
    Q_rr = (xrt**2 + xt * xrrt) / R - 2 * xt * xrt / R**2 + xt**2 / R**3
    U0, meanQ = theta_antiderivative(Q, P)
    U0_r, _ = theta_antiderivative(Q_r, P)
    U0_rr, _ = theta_antiderivative(Q_rr, P)
    ut0, ut0_r, ut0_rr = -U0, -U0_r, -U0_rr
    psi = xi_parts["psi"]
    us = sol.ustar(r)
    drift_theta = P * np.max(np.abs(meanQ + psi**2 * us))

    m = np.mean(xi_r * xt, axis=1)
    dm = np.mean(xi_rr * xt + xi_r * xrt, axis=1)
    # u1 / r = int_r^{R0} m / rho^2, zero beyond R0 where m vanishes
    tail = cumulative_trapezoid((m / r**2)[::-1], r[::-1], initial=0.0)[::-1]
    tail_R0 = np.interp(sol.R0, r, tail)
    u1 = np.where(r <= sol.R0, r * (tail - tail_R0), 0.0)
    u1_r = (u1 - m) / r

    ut = ut0 + u1[:, None]
    ut_r = ut0_r + u1_r[:, None]
    S = R * ut_r - ut + xi_r * xt
    S_r = R * ut0_rr - dm[:, None] + xi_rr * xt + xi_r * xrt
    V, meanS = theta_antiderivative(S, P)
    V_r, _ = theta_antiderivative(S_r, P)
    ur0, ur0_r = -V, -V_r
    drift_r = P * np.max(np.abs(meanS))
    L2 = params.L**2
    field = DisplacementField(
        grid, P, ur0 / L2, ut, xi,
        u_r_base=us, u_r_base_r=sol.ustar_prime(r),
        u_r_r=ur0_r / L2, u_theta_r=ut_r, xi_r=xi_r, xi_rr=xi_rr,
    )
    amp = max(np.max(np.abs(ut)), np.max(np.abs(ur0)), np.finfo(float).tiny)
    return field, drift_theta / amp, drift_r / amp


def _kernel_excess(a: np.ndarray, da: np.ndarray, eps: float) -> float:
    """``max(|a'| - a / eps)``; nonpositive by the kernel identity."""
    return float(np.max(np.abs(da) - a / eps))


def construct_recovery(mu: FrequencyMeasure, sol: RelaxedSolution, L: float, M: int | None = None,
                       n_bulk: int | None = None, theta_count: int | None = None,
                       tol: float = 1e-10) -> RecoveryFields:
    """Build the recovery triple for ``mu`` at scale ``L`` and check it.

    Raises
    ------
    ConstructionError
        A linear-drift (periodicity) defect or the constraint defect exceeds ``tol``.
    """
    params = schedule(L, M)
    binned = k_discretize(mu, params.L0)
    lam = select_lambda(binned, params.eps)
    ext = extend_density(binned, lam, params.eps)
    grid = recovery_grid(binned, ext, params, sol, n_bulk=n_bulk)
    parts = build_xi(binned, ext, params, sol, grid, theta_count)
    field, drift_theta, drift_r = build_inplane(parts, params, sol, grid)
    r = grid.nodes
    P = 2 * np.pi * params.L0
    xt = theta_derivative(field.xi, P, 1)
    target = parts["psi"] ** 2 * np.maximum(-r * sol.ustar(r), 0.0)
    scale = np.max(target)
    constraint_defect = float(np.max(np.abs(0.5 * np.mean(xt**2, axis=1) - target)) / scale)
    periodicity = max(drift_theta, drift_r)
    if periodicity > tol:
        raise ConstructionError(f"periodicity defect {periodicity:.3e} above {tol:.1e}")
    if constraint_defect > tol:
        raise ConstructionError(f"constraint defect {constraint_defect:.3e} above {tol:.1e}")

    eps = params.eps
    a, da = parts["a"], parts["da"]
    window = (r > sol.cfg.R_in + math.sqrt(eps)) & (r < sol.R0 - 8 * eps)
    f2_dev = float(np.max(np.abs(parts["f"][window] ** 2 - 1))) if np.any(window) else float("nan")
    remainder = np.abs(parts["A"][window] + r[window] * sol.ustar(r[window]))
    remainder_constant = float(np.max(remainder) / eps) if np.any(window) else float("nan")

    # F_inf of the mollified densities up to R0 (the leading term of xi_hat)
    inner = r <= sol.R0
    ri = r[inner]
    k = parts["k"]
    amp, amp_r = parts["amp"][inner], parts["amp_r"][inner]
    dens = sol.ustar_prime(ri) * np.sum(amp_r**2, axis=1) + np.sum(amp**2 * k**4, axis=1) / ri**4
    leading_hat = float(np.pi * trapezoid(dens * ri, ri))
    return RecoveryFields(
        params=params, binned=binned, extension=ext, field=field, harmonics=parts["harmonics"],
        a=a, da=da, A=parts["A"], f=parts["f"], psi=parts["psi"],
        constraint_defect=constraint_defect, periodicity_defect=periodicity,
        kernel_excess=_kernel_excess(a, da, eps), f2_deviation=f2_dev,
        leading_hat=leading_hat, remainder_constant=remainder_constant,
        theta_count=parts["theta_count"],
    )


def measure_discrepancy(mu_L: FrequencyMeasure, mu: FrequencyMeasure) -> float:
    """Distance between a field-induced measure and the target.

    Both measures are read as cell-wise constant densities on their own dual
    cells (node masses ``b * cell_width``) and ``mu_L`` is remapped conservatively
    onto the cells of ``mu``. In every cell the two frequency distributions are
    compared by the L1 distance of their cumulative mass functions (the
    Wasserstein-1 distance in ``k`` for equal masses). The sum over cells is
    divided by the total target mass, so the result is a mean frequency
    displacement; it is exactly 0 for ``mu_L = mu``.
    """
    r_t = mu.r_grid.nodes
    edges_t = np.concatenate([[mu.r_grid.lower], 0.5 * (r_t[1:] + r_t[:-1]), [mu.r_grid.upper]])
    r_L = mu_L.r_grid.nodes
    edges_L = np.concatenate([[mu_L.r_grid.lower], 0.5 * (r_L[1:] + r_L[:-1]), [mu_L.r_grid.upper]])
    cum = np.vstack([np.zeros((1, mu_L.k_set.size)), np.cumsum(mu_L.b * np.diff(edges_L)[:, None], axis=0)])
    # the cumulative mass is linear inside each source cell, so interpolation is exact
    at_edges = np.stack([np.interp(edges_t, edges_L, cum[:, j]) for j in range(cum.shape[1])], axis=1)
    cells_L = np.diff(at_edges, axis=0)
    cells_t = mu.b * np.diff(edges_t)[:, None]
    ks = np.union1d(mu.k_set, mu_L.k_set)
    FL = np.zeros((cells_L.shape[0], ks.size))
    Ft = np.zeros_like(FL)
    FL[:, np.searchsorted(ks, mu_L.k_set)] = cells_L
    Ft[:, np.searchsorted(ks, mu.k_set)] = cells_t
    FL, Ft = np.cumsum(FL, axis=1), np.cumsum(Ft, axis=1)
    w1 = np.sum(np.abs(FL - Ft)[:, :-1] * np.diff(ks)[None, :], axis=1)
    return float(w1.sum() / cells_t.sum())


@dataclass
class GammaRow:
    """One line of the limsup table."""

    params: RecoveryParams
    breakdown: EnergyBreakdown
    Finfty_target: float
    Finfty_binned: float
    leading_hat: float
    discrepancy: float
    constraint_defect: float
    periodicity_defect: float
    kernel_excess: float
    f2_deviation: float
    remainder_constant: float
    nr: int
    theta_count: int
    runtime: float

    @property
    def total(self) -> float:
        return self.breakdown.total

    @property
    def relative_gap(self) -> float:
        return (self.total - self.Finfty_target) / self.Finfty_target

    def as_dict(self) -> dict:
        out = {"L": self.params.L, "M": self.params.M, "eps": self.params.eps, "delta": self.params.delta,
               "n": self.params.n, "L0": self.params.L0}
        out.update(self.breakdown.as_dict())
        out.update(Finfty_target=self.Finfty_target, Finfty_binned=self.Finfty_binned,
                   leading_hat=self.leading_hat, relative_gap=self.relative_gap,
                   measure_discrepancy=self.discrepancy, constraint_defect=self.constraint_defect,
                   periodicity_defect=self.periodicity_defect, kernel_excess=self.kernel_excess,
                   f2_deviation=self.f2_deviation, remainder_constant=self.remainder_constant,
                   nr=self.nr, theta_count=self.theta_count, runtime=self.runtime)
        return out


def gamma_row(mu: FrequencyMeasure, sol: RelaxedSolution, L: float, **kwargs) -> GammaRow:
    """Construct the triple at ``L``, evaluate ``F_L`` and the diagnostics."""
    t0 = time.perf_counter()
    rec = construct_recovery(mu, sol, L, **kwargs)
    breakdown = eval_FL(rec.field, L, sol)
    ff = fourier_forward(rec.field.xi, rec.field.period, rec.field.r_grid)
    mu_L = measure_from_field(ff, sol)
    row = GammaRow(
        params=rec.params,
        breakdown=breakdown,
        Finfty_target=eval_Finfty(mu, sol).total,
        Finfty_binned=eval_Finfty(rec.binned, sol).total,
        leading_hat=rec.leading_hat,
        discrepancy=measure_discrepancy(mu_L, mu),
        constraint_defect=rec.constraint_defect,
        periodicity_defect=rec.periodicity_defect,
        kernel_excess=rec.kernel_excess,
        f2_deviation=rec.f2_deviation,
        remainder_constant=rec.remainder_constant,
        nr=rec.field.r_grid.size,
        theta_count=rec.theta_count,
        runtime=time.perf_counter() - t0,
    )
    log.info("L=%.3g F_L=%.6f (target %.6f)", L, row.total, row.Finfty_target)
    return row


def run_gamma_limsup(mu: FrequencyMeasure, sol: RelaxedSolution, L_list, **kwargs) -> list[GammaRow]:
    """Limsup table over an increasing list of scales."""
    L_list = sorted(float(L) for L in L_list)
    return [gamma_row(mu, sol, L, **kwargs) for L in L_list]
