"""Föppl-von Kármán energy in polar coordinates and its rescaled excess form.

All angular averages are lattice means (exact for trigonometric polynomials within
the bandwidth rule), angular derivatives are spectral, and radial integrals use the
trapezoid rule with weight ``r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import DomainError
from .fourier import FourierField, check_bandwidth, theta_derivative, theta_lattice
from .grids import RadialGrid, d2_dr2, d_dr, trapezoid
from .relaxed import RelaxedSolution


@dataclass(eq=False)
class DisplacementField:
    """Sampled displacement triple on an ``(r, theta)`` lattice.

    Parameters
    ----------
    r_grid : RadialGrid
    period : float
        Angular period of the lattice (``2 pi`` for physical fields, ``2 pi L`` or
        ``2 pi L0`` for rescaled ones).
    u_r, u_theta, xi : ndarray, shape (nr, n)
        In-plane and out-of-plane displacements. If ``u_r_base`` is given, ``u_r``
        holds the deviation from it.
    u_r_base, u_r_base_r : ndarray, shape (nr,), optional
        Angle-independent radial profile added to ``u_r`` and its exact derivative.
        Splitting off ``u*`` this way keeps small deviations representable when they
        are multiplied by large powers of ``L``.
    u_r_r, u_theta_r, xi_r, xi_rr : ndarray, optional
        Exact radial derivatives. Missing ones are taken by finite differences.
    """

    r_grid: RadialGrid
    period: float
    u_r: np.ndarray
    u_theta: np.ndarray
    xi: np.ndarray
    u_r_base: np.ndarray | None = None
    u_r_base_r: np.ndarray | None = None
    u_r_r: np.ndarray | None = None
    u_theta_r: np.ndarray | None = None
    xi_r: np.ndarray | None = None
    xi_rr: np.ndarray | None = None

    def __post_init__(self):
        shape = (self.r_grid.size,)
        for f in fields(self):
            if f.name in ("r_grid", "period"):
                continue
            value = getattr(self, f.name)
            if value is None:
                continue
            value = np.asarray(value, dtype=float)
            setattr(self, f.name, value)
        base_shape = self.u_r.shape
        if len(base_shape) != 2 or base_shape[0] != shape[0]:
            raise DomainError("field arrays must have shape (len(r_grid), theta_count)")
        theta_lattice(base_shape[1], self.period)
        for name in ("u_theta", "xi", "u_r_r", "u_theta_r", "xi_r", "xi_rr"):
            value = getattr(self, name)
            if value is not None and value.shape != base_shape:
                raise DomainError(f"{name} has shape {value.shape}, expected {base_shape}")
        for name in ("u_r_base", "u_r_base_r"):
            value = getattr(self, name)
            if value is not None and value.shape != shape:
                raise DomainError(f"{name} must have shape {shape}")
        if (self.u_r_base is None) != (self.u_r_base_r is None):
            raise DomainError("u_r_base and u_r_base_r must be given together")

    @property
    def theta_count(self) -> int:
        return self.u_r.shape[1]

    @property
    def theta(self) -> np.ndarray:
        return theta_lattice(self.theta_count, self.period)

    def total_u_r(self) -> np.ndarray:
        if self.u_r_base is None:
            return self.u_r
        return self.u_r + self.u_r_base[:, None]

    @classmethod
    def zeros(cls, r_grid: RadialGrid, theta_count: int, period: float = 2 * np.pi) -> "DisplacementField":
        z = np.zeros((r_grid.size, theta_count))
        return cls(r_grid, period, z, z.copy(), z.copy())

    @classmethod
    def from_functions(cls, r_grid, theta_count, period, u_r, u_theta, xi) -> "DisplacementField":
        """Sample callables ``f(r, theta)`` on the lattice."""
        R, T = np.meshgrid(r_grid.nodes, theta_lattice(theta_count, period), indexing="ij")
        return cls(r_grid, period, u_r(R, T), u_theta(R, T), xi(R, T))


@dataclass(frozen=True)
class EnergyBreakdown:
    """The six grouped contributions to the rescaled excess energy."""

    term1: float  # radial membrane mismatch
    term2: float  # (u*)_+ coupling
    term3: float  # hoop mismatch
    term4: float  # shear
    term5: float  # leading stretching/bending term
    term6: float  # residual bending

    @property
    def total(self) -> float:
        return self.term1 + self.term2 + self.term3 + self.term4 + self.term5 + self.term6

    def as_dict(self) -> dict:
        out = {f"term{i}": getattr(self, f"term{i}") for i in range(1, 7)}
        out["total"] = self.total
        return out


@dataclass
class _Derivatives:
    ur: np.ndarray
    ur_r_dev: np.ndarray  # d_r u_r - u*' when the base is u*, else d_r u_r
    ur_r: np.ndarray
    ur_t: np.ndarray
    ut: np.ndarray
    ut_r: np.ndarray
    ut_t: np.ndarray
    xi_r: np.ndarray
    xi_t: np.ndarray
    xi_tt: np.ndarray
    xi_rr: np.ndarray
    xi_rt: np.ndarray


def _derivatives(field: DisplacementField, udot: np.ndarray | None = None) -> _Derivatives:
    r = field.r_grid.nodes
    P = field.period
    ur_dev_r = field.u_r_r if field.u_r_r is not None else d_dr(field.u_r, r, axis=0)
    if field.u_r_base is not None:
        base_r = field.u_r_base_r[:, None]
        ur_r = ur_dev_r + base_r
        # subtract u*' from the exact base first so the deviation is kept to full precision
        ur_r_dev = ur_dev_r + (base_r - udot[:, None]) if udot is not None else ur_r
    else:
        ur_r = ur_dev_r
        ur_r_dev = ur_r - udot[:, None] if udot is not None else ur_r
    xi_r = field.xi_r if field.xi_r is not None else d_dr(field.xi, r, axis=0)
    xi_rr = field.xi_rr if field.xi_rr is not None else d2_dr2(field.xi, r, axis=0)
    return _Derivatives(
        ur=field.total_u_r(),
        ur_r_dev=ur_r_dev,
        ur_r=ur_r,
        ur_t=theta_derivative(field.u_r, P, 1),
        ut=field.u_theta,
        ut_r=field.u_theta_r if field.u_theta_r is not None else d_dr(field.u_theta, r, axis=0),
        ut_t=theta_derivative(field.u_theta, P, 1),
        xi_r=xi_r,
        xi_t=theta_derivative(field.xi, P, 1),
        xi_tt=theta_derivative(field.xi, P, 2),
        xi_rr=xi_rr,
        xi_rt=theta_derivative(xi_r, P, 1),
    )


def _radial_integral(density: np.ndarray, r: np.ndarray) -> float:
    """``int mean_theta(density) r dr`` by the trapezoid rule."""
    return float(trapezoid(np.mean(density, axis=1) * r, r))


def _require_annulus(field: DisplacementField, sol: RelaxedSolution) -> None:
    if not field.r_grid.spans(sol.cfg.R_in, sol.cfg.R_out):
        raise DomainError("field must be sampled on a grid spanning [R_in, R_out]")


def eval_Eh(field: DisplacementField, h: float, sol: RelaxedSolution, check_aliasing: bool = True) -> float:
    """Föppl-von Kármán energy of a ``2 pi``-periodic field including boundary loads.

    Raises
    ------
    AliasingError
        ``theta_count`` below four times the bandwidth of ``xi``.
    DomainError
        Period other than ``2 pi`` or grid not spanning the annulus.
    """
    if not math.isclose(field.period, 2 * np.pi, rel_tol=1e-12):
        raise DomainError("eval_Eh expects physical fields with period 2 pi")
    _require_annulus(field, sol)
    if check_aliasing:
        check_bandwidth(field.xi)
    r = field.r_grid.nodes
    R = r[:, None]
    d = _derivatives(field)
    density = (
        (d.ur_r + 0.5 * d.xi_r**2) ** 2
        + (d.ur / R + d.ut_t / R + d.xi_t**2 / (2 * R**2)) ** 2
        + 2 * (d.ur_t / (2 * R) + d.ut_r / 2 - d.ut / (2 * R) + d.xi_r * d.xi_t / (2 * R)) ** 2
        + h**2 * (d.xi_rr**2 + 2 * d.xi_rt**2 / R**2 + d.xi_tt**2 / R**4)
    )
    cfg = sol.cfg
    ur_mean = np.mean(d.ur, axis=1)
    boundary = cfg.T_in * cfg.R_in * ur_mean[0] - cfg.T_out * cfg.R_out * ur_mean[-1]
    return 2 * np.pi * (0.5 * _radial_integral(density, r) + boundary)


def excess_form(field: DisplacementField, h: float, sol: RelaxedSolution) -> float:
    """Completed-square expression for ``E_h - E0`` (no boundary terms)."""
    _require_annulus(field, sol)
    r = field.r_grid.nodes
    R = r[:, None]
    us = sol.ustar(r)[:, None]
    ud = sol.ustar_prime(r)[:, None]
    usp = np.maximum(us, 0.0)
    d = _derivatives(field, udot=sol.ustar_prime(r))
    density = (
        ud * d.xi_r**2
        + (d.ur_r_dev + 0.5 * d.xi_r**2) ** 2
        + usp / R * d.xi_t**2 / R**2
        + (d.ur / R + d.ut_t / R + d.xi_t**2 / (2 * R**2) - usp / R) ** 2
        + 2 * (d.ur_t / (2 * R) + d.ut_r / 2 - d.ut / (2 * R) + d.xi_r * d.xi_t / (2 * R)) ** 2
        + h**2 * (d.xi_rr**2 + 2 * d.xi_rt**2 / R**2 + d.xi_tt**2 / R**4)
    )
    return float(np.pi * _radial_integral(density, r))


def relaxed_energy_on_grid(sol: RelaxedSolution, r_grid: RadialGrid) -> float:
    """``E0`` with the same derivative operator and quadrature as :func:`eval_Eh`.

    ``u*`` is sampled at the nodes and differentiated by finite differences, so
    the value differs from the closed form by the discretization error shared with
    ``eval_Eh``.
    """
    r = r_grid.nodes
    u = sol.ustar(r)
    du = d_dr(u, r)
    bulk = 0.5 * (np.maximum(du, 0.0) ** 2 + np.maximum(u / r, 0.0) ** 2) * r
    cfg = sol.cfg
    boundary = cfg.T_in * cfg.R_in * u[0] - cfg.T_out * cfg.R_out * u[-1]
    return float(2 * np.pi * (trapezoid(bulk, r) + boundary))


@dataclass(frozen=True)
class ExcessCheck:
    """Result of :func:`excess_identity_check`.

    ``relative`` divides the absolute residual by ``max(|E_h|, |E0|)``, the scale
    on which both sides are computed.
    """

    Eh: float
    E0: float
    excess: float
    residual: float
    relative: float


def excess_identity_check(field: DisplacementField, h: float, sol: RelaxedSolution) -> ExcessCheck:
    """Compare ``E_h - E0`` against the completed-square excess form.

    Both sides come from independent integrands on the same lattice. ``E0`` is
    evaluated with the same quadrature and finite-difference operator as ``E_h``
    (:func:`relaxed_energy_on_grid`), so that the residual reflects the algebra and
    the discrete integration by parts rather than the plain quadrature error of
    ``E0``.
    """
    Eh = eval_Eh(field, h, sol)
    E0 = relaxed_energy_on_grid(sol, field.r_grid)
    ex = excess_form(field, h, sol)
    res = abs((Eh - E0) - ex)
    scale = max(abs(Eh), abs(E0), np.finfo(float).tiny)
    return ExcessCheck(Eh, E0, ex, res, res / scale)


def _check_rescaled(field: DisplacementField, L: float) -> None:
    if L <= 0:
        raise DomainError("L must be positive")
    blocks = 2 * np.pi * L / field.period
    if abs(blocks - round(blocks)) > 1e-8 * max(1.0, blocks) or round(blocks) < 1:
        raise DomainError("field period must divide 2 pi L")


def eval_FL(field: DisplacementField, L: float, sol: RelaxedSolution, check_aliasing: bool = True) -> EnergyBreakdown:
    """Rescaled excess energy ``F_L = L^2 E_L`` split into its six groups.

    The field is given in rescaled variables and must be periodic with a period
    dividing ``2 pi L``; the angular mean over one period then equals the mean over
    ``2 pi L``.
    """
    _check_rescaled(field, L)
    if check_aliasing:
        check_bandwidth(field.xi)
    r = field.r_grid.nodes
    if r[0] < sol.cfg.R_in * (1 - 1e-12) or r[-1] > sol.cfg.R_out * (1 + 1e-12):
        raise DomainError("field grid leaves the annulus")
    R = r[:, None]
    us = sol.ustar(r)[:, None]
    ud = sol.ustar_prime(r)[:, None]
    usp = np.maximum(us, 0.0)
    d = _derivatives(field, udot=sol.ustar_prime(r))
    L2 = L * L
    t1 = L2 * (d.ur_r_dev + 0.5 * d.xi_r**2 / L2) ** 2
    t2 = L2 * usp / R * d.xi_t**2 / R**2
    t3 = L2 * (d.ur / R + d.ut_t / R + d.xi_t**2 / (2 * R**2) - usp / R) ** 2
    t4 = 2 * (L2 * d.ur_t / (2 * R) + d.ut_r / 2 - d.ut / (2 * R) + d.xi_r * d.xi_t / (2 * R)) ** 2
    t5 = ud * d.xi_r**2 + d.xi_tt**2 / R**4
    t6 = (d.xi_rr**2 / L2 + 2 * d.xi_rt**2 / R**2) / L2
    terms = [np.pi * _radial_integral(t, r) for t in (t1, t2, t3, t4, t5, t6)]
    return EnergyBreakdown(*terms)


def eval_EL(field: DisplacementField, L: float, sol: RelaxedSolution) -> float:
    """``E_L`` evaluated from its own integrand (so that ``F_L = L^2 E_L`` is a check)."""
    _check_rescaled(field, L)
    r = field.r_grid.nodes
    R = r[:, None]
    us = sol.ustar(r)[:, None]
    ud = sol.ustar_prime(r)[:, None]
    usp = np.maximum(us, 0.0)
    d = _derivatives(field, udot=sol.ustar_prime(r))
    density = (
        ud * d.xi_r**2 / L**2
        + (d.ur_r_dev + 0.5 * d.xi_r**2 / L**2) ** 2
        + usp / R * d.xi_t**2 / R**2
        + (d.ur / R + d.ut_t / R + d.xi_t**2 / (2 * R**2) - usp / R) ** 2
        + 2 * (L * d.ur_t / (2 * R) + d.ut_r / (2 * L) - d.ut / (2 * R * L) + d.xi_r * d.xi_t / (2 * R * L)) ** 2
        + (d.xi_rr**2 / L**2 + 2 * d.xi_rt**2 / R**2 + L**2 * d.xi_tt**2 / R**4) / L**4
    )
    return float(np.pi * _radial_integral(density, r))


def rescale_field(field: DisplacementField, L: float) -> DisplacementField:
    """Map a ``2 pi``-periodic physical field to rescaled variables.

    ``u_r(r, theta / L)``, ``L u_theta(r, theta / L)`` and ``L xi(r, theta / L)`` on a
    lattice of period ``2 pi L``; the samples are unchanged up to the factors.
    """
    if not math.isclose(field.period, 2 * np.pi, rel_tol=1e-12):
        raise DomainError("rescale_field expects a 2 pi-periodic field")

    def scaled(x):
        return None if x is None else L * x

    return DisplacementField(
        field.r_grid,
        2 * np.pi * L,
        field.u_r,
        L * field.u_theta,
        L * field.xi,
        u_r_base=field.u_r_base,
        u_r_base_r=field.u_r_base_r,
        u_r_r=field.u_r_r,
        u_theta_r=scaled(field.u_theta_r),
        xi_r=scaled(field.xi_r),
        xi_rr=scaled(field.xi_rr),
    )


def leading_term(ff: FourierField, sol: RelaxedSolution) -> float:
    """Fourier-space leading term ``pi sum_k int (u*' a_k'^2 + a_k^2 k^4 / r^4) r dr``.

    ``a_k'`` is taken with the same radial finite-difference operator as
    :func:`eval_FL`, so the two agree to round-off by Plancherel.
    """
    if ff.r_grid is None:
        raise DomainError("leading_term needs the radial grid of the coefficients")
    r = ff.r_grid.nodes
    ud = sol.ustar_prime(r)
    a = ff.coeffs
    da = d_dr(a, r, axis=0)
    k4 = ff.k_set**4
    density = ud * np.sum(da**2, axis=1) + np.sum(a**2 * k4, axis=1) / r**4
    return float(np.pi * trapezoid(density * r, r))
