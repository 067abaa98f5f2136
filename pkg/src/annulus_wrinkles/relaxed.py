"""Radially symmetric relaxed (tension-field) problem on the annulus.

The relaxed functional is

    F(v) = 2 pi [ 1/2 int ((v')_+^2 + (v/r)_+^2) r dr + T_in R_in v(R_in) - T_out R_out v(R_out) ],

whose minimizer ``u*`` is negative (compressed, wrinkled) on ``(R_in, R0)`` and
positive (taut) on ``(R0, R_out)``. On the wrinkled part ``r u*'`` is constant,
so ``u* = T_in R_in log(r / R0)``; on the taut part ``u* = A/r + B r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .errors import (
    ConvergenceError,
    DomainError,
    HypothesisError,
    InfeasibleGeometryError,
    InternalInconsistencyError,
    InvalidConfigError,
)
from .grids import RadialGrid, trapezoid


@dataclass(frozen=True)
class LameConfig:
    """Boundary loads and radii of the Lamé annulus."""

    T_in: float
    T_out: float
    R_in: float
    R_out: float

    def __post_init__(self):
        for name in ("T_in", "T_out", "R_in", "R_out"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating)) or not math.isfinite(value) or value <= 0:
                raise InvalidConfigError(f"{name} must be a finite positive number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.R_out <= self.R_in:
            raise InvalidConfigError("R_out must exceed R_in")

    def as_dict(self) -> dict:
        return {"T_in": self.T_in, "T_out": self.T_out, "R_in": self.R_in, "R_out": self.R_out}


REFERENCE_CONFIG = LameConfig(1.8, 1.0, 1.0, 2.0)


@dataclass(frozen=True)
class HypothesisReport:
    """Both admissibility inequalities with their two sides."""

    admissible: bool
    load_lhs: float  # T_in R_in
    load_rhs: float  # T_out R_out
    load_ok: bool
    ratio_lhs: float  # T_in / T_out
    ratio_rhs: float  # 2 R_out^2 / (R_in^2 + R_out^2)
    ratio_ok: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def check_hypothesis(cfg: LameConfig) -> HypothesisReport:
    """Evaluate the two admissibility inequalities.

    The loads must satisfy ``T_in R_in < T_out R_out`` (the outer rim is not fully
    wrinkled) and ``T_in / T_out > 2 R_out^2 / (R_in^2 + R_out^2)`` (the inner rim
    wrinkles).
    """
    load_lhs = cfg.T_in * cfg.R_in
    load_rhs = cfg.T_out * cfg.R_out
    ratio_lhs = cfg.T_in / cfg.T_out
    ratio_rhs = 2.0 * cfg.R_out**2 / (cfg.R_in**2 + cfg.R_out**2)
    load_ok = load_lhs < load_rhs
    ratio_ok = ratio_lhs > ratio_rhs
    return HypothesisReport(load_ok and ratio_ok, load_lhs, load_rhs, load_ok, ratio_lhs, ratio_rhs, ratio_ok)


@dataclass(frozen=True)
class RelaxedSolution:
    """Closed-form minimizer of the relaxed problem.

    Attributes
    ----------
    cfg : LameConfig
    R0 : float
        Free boundary, root of the C^1 matching quadratic.
    A, B : float
        Taut branch ``u* = A / r + B r`` on ``[R0, R_out]``.
    C : float
        Wrinkled branch coefficient ``T_in R_in``; ``u* = C log(r / R0)``.
    remark_A, remark_B : float
        Fully taut Lamé constants, fixed by ``u'(R_in) = T_in`` and ``u'(R_out) = T_out``.
    remark_R0 : float
        ``sqrt(-remark_A / remark_B)`` (nan when the ratio is positive).
    """

    cfg: LameConfig
    R0: float
    A: float
    B: float
    C: float
    remark_A: float
    remark_B: float
    remark_R0: float
    E0: float = field(default=float("nan"))

    def _check(self, r):
        r = np.asarray(r, dtype=float)
        tol = 1e-12 * self.cfg.R_out
        if np.any(r < self.cfg.R_in - tol) or np.any(r > self.cfg.R_out + tol):
            raise DomainError(f"radius outside [{self.cfg.R_in}, {self.cfg.R_out}]")
        return r

    def ustar(self, r):
        """Displacement ``u*(r)``."""
        r = self._check(r)
        with np.errstate(divide="ignore"):
            inner = self.C * np.log(r / self.R0)
        return np.where(r <= self.R0, inner, self.A / r + self.B * r)

    def ustar_prime(self, r):
        """Derivative ``u*'(r)``."""
        r = self._check(r)
        return np.where(r <= self.R0, self.C / r, -self.A / r**2 + self.B)

    def ustar_second(self, r):
        """Second derivative (one-sided at ``R0``, where it jumps)."""
        r = self._check(r)
        return np.where(r <= self.R0, -self.C / r**2, 2.0 * self.A / r**3)

    def beta(self, r):
        """``sqrt(-r u*(r))`` on the wrinkled region, 0 elsewhere."""
        r = self._check(r)
        return np.sqrt(np.maximum(-r * self.ustar(r), 0.0))

    def profile(self, r):
        """Wrinkling constraint profile ``-2 r u*(r)``, clipped at 0."""
        r = self._check(r)
        return np.maximum(-2.0 * r * self.ustar(r), 0.0)


def solve_free_boundary(cfg: LameConfig) -> RelaxedSolution:
    """Closed-form relaxed minimizer.

    The free boundary is the smaller root of

        T_in R_in R0^2 - 2 T_out R_out^2 R0 + T_in R_in R_out^2 = 0,

    which encodes ``u*(R0) = 0``, continuity of ``u*'`` at ``R0`` and
    ``u*'(R_out) = T_out`` for the taut branch ``A/r + B r``. The constants of the
    fully taut solution and the radius ``sqrt(-A/B)`` they would suggest are
    returned alongside for comparison.

    Raises
    ------
    InternalInconsistencyError
        Negative discriminant, i.e. ``T_in R_in > T_out R_out``.
    InfeasibleGeometryError
        The root does not lie in ``(R_in, R_out]``.
    """
    c = cfg.T_in * cfg.R_in
    disc = (cfg.T_out * cfg.R_out**2) ** 2 - c**2 * cfg.R_out**2
    if disc < 0:
        raise InternalInconsistencyError(
            f"negative discriminant {disc:.3e}: requires T_out R_out >= T_in R_in"
        )
    # Smaller root written without cancellation: R_out^2 / larger root.
    larger = (cfg.T_out * cfg.R_out**2 + math.sqrt(disc)) / c
    R0 = cfg.R_out**2 / larger
    if not (cfg.R_in < R0 <= cfg.R_out * (1 + 1e-14)):
        raise InfeasibleGeometryError(
            f"free-boundary root {R0:.6g} outside (R_in, R_out] = ({cfg.R_in}, {cfg.R_out}]"
        )
    R0 = min(R0, cfg.R_out)
    B = cfg.T_out * cfg.R_out**2 / (R0**2 + cfg.R_out**2)
    A = -B * R0**2
    rA = (cfg.T_in - cfg.T_out) / (cfg.R_out**-2 - cfg.R_in**-2)
    rB = (cfg.T_out * cfg.R_out**2 - cfg.T_in * cfg.R_in**2) / (cfg.R_out**2 - cfg.R_in**2)
    ratio = -rA / rB if rB != 0 else float("nan")
    remark_R0 = math.sqrt(ratio) if ratio > 0 else float("nan")
    sol = RelaxedSolution(cfg, R0, A, B, c, rA, rB, remark_R0)
    object.__setattr__(sol, "E0", relaxed_energy_closed_form(sol))
    return sol


def eval_ustar(sol: RelaxedSolution, r):
    """Return ``(u*(r), u*'(r))``; raises ``DomainError`` outside the annulus."""
    return sol.ustar(r), sol.ustar_prime(r)


def relaxed_energy_closed_form(sol: RelaxedSolution) -> float:
    """Exact ``E0``.

    Testing the Euler-Lagrange equation with ``u*`` turns the boundary terms into
    ``-int (u*'^2 + (u*)_+^2 / r^2) r dr``, hence ``E0 = -pi int (...) r dr``, which
    integrates in closed form on both branches.
    """
    cfg = sol.cfg
    inner = sol.C**2 * math.log(sol.R0 / cfg.R_in)
    outer = sol.B**2 * (cfg.R_out**2 - sol.R0**2) + sol.A**2 * (sol.R0**-2 - cfg.R_out**-2)
    return -math.pi * (inner + outer)


def relaxed_energy_E0(sol: RelaxedSolution, grid: RadialGrid) -> float:
    """Trapezoid quadrature of the relaxed energy on ``grid``.

    The bulk integrand ``((u*')_+^2 + (u*/r)_+^2) r / 2`` is integrated with ``R0``
    inserted as an extra breakpoint (the integrand has a kink there), scaled by
    ``2 pi`` and completed by the two boundary load terms.
    """
    cfg = sol.cfg
    if not grid.spans(cfg.R_in, cfg.R_out):
        raise DomainError("relaxed_energy_E0 needs a grid spanning [R_in, R_out]")
    r = np.union1d(grid.nodes, [sol.R0])
    u = sol.ustar(r)
    du = sol.ustar_prime(r)
    bulk = 0.5 * (np.maximum(du, 0.0) ** 2 + np.maximum(u / r, 0.0) ** 2) * r
    boundary = cfg.T_in * cfg.R_in * u[0] - cfg.T_out * cfg.R_out * u[-1]
    return float(2.0 * np.pi * (trapezoid(bulk, r) + boundary))


def el_residual(sol: RelaxedSolution, grid: RadialGrid) -> np.ndarray:
    """Discrete Euler-Lagrange residual ``(r u')' - (u/r)_+`` at interior nodes.

    Uses the conservative second-order stencil
    ``[r_{i+1/2}(u_{i+1}-u_i) - r_{i-1/2}(u_i-u_{i-1})] / h^2`` on samples of the
    closed form.
    """
    r = grid.nodes
    u = sol.ustar(r)
    h = np.diff(r)
    rm = 0.5 * (r[1:] + r[:-1])
    flux = rm * np.diff(u) / h
    div = (flux[1:] - flux[:-1]) / (0.5 * (h[1:] + h[:-1]))
    return div - np.maximum(u[1:-1] / r[1:-1], 0.0)


def relaxed_functional(v: np.ndarray, grid: RadialGrid, cfg: LameConfig) -> float:
    """Discrete relaxed functional used by the numerical oracle.

    Forward differences for ``v'`` (weighted by midpoint radii), nodal values for
    ``v / r`` with trapezoid weights, and the two boundary load terms.
    """
    return _functional_and_gradient(np.asarray(v, float), grid.nodes, cfg)[0]


def _trap_weights(r: np.ndarray) -> np.ndarray:
    h = np.diff(r)
    w = np.zeros_like(r)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def _functional_and_gradient(v, r, cfg):
    h = np.diff(r)
    rm = 0.5 * (r[1:] + r[:-1])
    w = _trap_weights(r)
    d = np.maximum(np.diff(v) / h, 0.0)
    q = np.maximum(v / r, 0.0)
    value = 2 * np.pi * (
        0.5 * np.sum(d**2 * rm * h)
        + 0.5 * np.sum(w * q**2 * r)
        + cfg.T_in * cfg.R_in * v[0]
        - cfg.T_out * cfg.R_out * v[-1]
    )
    g = w * q  # d/dv of 1/2 w (v/r)^2 r
    flux = d * rm
    g[1:] += flux
    g[:-1] -= flux
    g[0] += cfg.T_in * cfg.R_in
    g[-1] -= cfg.T_out * cfg.R_out
    return float(value), 2 * np.pi * g


@dataclass
class RelaxedNumericResult:
    """Output of :func:`minimize_relaxed_numeric`."""

    r: np.ndarray
    v: np.ndarray
    value: float
    iterations: int
    grad_norm: float
    sign_change: float
    trace: list = field(default_factory=list)


def minimize_relaxed_numeric(
    cfg: LameConfig,
    grid: RadialGrid,
    tol: float = 1e-11,
    max_iter: int = 20000,
) -> RelaxedNumericResult:
    """Independent numerical minimizer of the discrete relaxed functional.

    Accelerated gradient descent with gradient-based adaptive restart, taken in the
    metric of the fully taut quadratic form ``P`` (the Hessian with all positive
    parts switched on). Because every active-set Hessian is bounded by ``P``,
    unit steps are safe and the iteration count is independent of the grid size.

    Parameters
    ----------
    cfg : LameConfig
    grid : RadialGrid
        Uniform vertex grid spanning ``[R_in, R_out]``.
    tol : float
        Stop when the preconditioned gradient ``P^{-1} grad`` has max-norm below
        ``tol``.
    max_iter : int
        Iteration budget.

    Returns
    -------
    RelaxedNumericResult
        Samples of the minimizer, the objective, and the radius where ``v`` changes
        sign (linear interpolation between the bracketing nodes).

    Raises
    ------
    ConvergenceError
        Budget exhausted before reaching ``tol``.
    """
    if not grid.spans(cfg.R_in, cfg.R_out) or not grid.is_uniform:
        raise DomainError("minimize_relaxed_numeric needs a uniform grid spanning [R_in, R_out]")
    r = grid.nodes
    n = r.size
    h = np.diff(r)
    rm = 0.5 * (r[1:] + r[:-1])
    w = _trap_weights(r)
    stiff = rm / h
    diag = w / r
    diag = diag.copy()
    diag[:-1] += stiff
    diag[1:] += stiff
    upper = np.zeros(n)
    upper[1:] = -stiff
    banded = 2 * np.pi * np.vstack([upper, diag])
    chol = cholesky_banded(banded)

    def precond(g):
        return cho_solve_banded((chol, False), g)

    x = np.zeros(n)
    fx, gx = _functional_and_gradient(x, r, cfg)
    y, t = x.copy(), 1.0
    trace = [fx]
    step_norm = np.inf
    for it in range(1, max_iter + 1):
        fy, gy = _functional_and_gradient(y, r, cfg)
        step = precond(gy)
        x_new = y - step
        step_norm = float(np.max(np.abs(step)))
        if np.dot(gy, x_new - x) > 0:  # restart when momentum points uphill
            t = 1.0
            y = x.copy()
            continue
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        y = x_new + ((t - 1) / t_new) * (x_new - x)
        x, t = x_new, t_new
        fx = _functional_and_gradient(x, r, cfg)[0]
        trace.append(fx)
        if step_norm < tol:
            break
    else:
        raise ConvergenceError("relaxed oracle did not converge", trace, step_norm)
    neg = np.nonzero(x < 0)[0]
    if neg.size == 0 or neg[-1] == n - 1:
        sign_change = float("nan")
    else:
        i = neg[-1]
        sign_change = float(r[i] - x[i] * (r[i + 1] - r[i]) / (x[i + 1] - x[i]))
    return RelaxedNumericResult(r.copy(), x, fx, it, step_norm, sign_change, trace)


def wrel(F) -> np.ndarray | float:
    """Relaxed energy density ``sum_i (lambda_i(F))_+^2`` of symmetric 2x2 tensors.

    Accepts a single ``(2, 2)`` array or a stack ``(..., 2, 2)``.
    """
    F = np.asarray(F, dtype=float)
    if F.shape[-2:] != (2, 2):
        raise ValueError("wrel expects symmetric 2x2 tensors")
    lam = np.linalg.eigvalsh(0.5 * (F + np.swapaxes(F, -1, -2)))
    out = np.sum(np.maximum(lam, 0.0) ** 2, axis=-1)
    return float(out) if out.ndim == 0 else out
