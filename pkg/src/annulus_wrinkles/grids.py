"""Radial grids, finite-difference operators and trapezoid quadrature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Strictly increasing radial nodes covering an interval.

    Parameters
    ----------
    nodes : ndarray
        Node positions.
    lower, upper : float
        End points of the covered interval. For vertex grids these coincide
        with the first and last node; cell-centred grids sit half a cell inside.
    """

    nodes: np.ndarray
    lower: float
    upper: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise DomainError("a radial grid needs at least two nodes")
        if not np.all(np.isfinite(nodes)) or np.any(np.diff(nodes) <= 0):
            raise DomainError("radial nodes must be finite and strictly increasing")
        if nodes[0] < self.lower - 1e-14 * abs(self.lower) or nodes[-1] > self.upper + 1e-14 * abs(self.upper):
            raise DomainError("radial nodes leave the declared interval")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, a: float, b: float, n: int) -> "RadialGrid":
        """Vertex grid with ``n`` nodes, first at ``a`` and last at ``b``."""
        if n < 2 or not b > a:
            raise DomainError("uniform grid needs n >= 2 and b > a")
        return cls(np.linspace(a, b, n), a, b)

    @classmethod
    def cell_centered(cls, a: float, b: float, n: int) -> "RadialGrid":
        """Cell-centred grid on the open interval (a, b): nodes at a + (i + 1/2) h."""
        if n < 2 or not b > a:
            raise DomainError("cell-centred grid needs n >= 2 and b > a")
        h = (b - a) / n
        return cls(a + (np.arange(n) + 0.5) * h, a, b)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def spacing(self) -> float | None:
        """Uniform step, or ``None`` for graded grids."""
        d = np.diff(self.nodes)
        if np.allclose(d, d[0], rtol=1e-9, atol=0.0):
            return float(self.nodes[-1] - self.nodes[0]) / (self.nodes.size - 1)
        return None

    @property
    def is_uniform(self) -> bool:
        return self.spacing is not None

    def spans(self, a: float, b: float, rtol: float = 1e-12) -> bool:
        """True if the first and last nodes are ``a`` and ``b``."""
        scale = max(abs(a), abs(b), 1.0)
        return abs(self.nodes[0] - a) <= rtol * scale and abs(self.nodes[-1] - b) <= rtol * scale


def d_dr(values: np.ndarray, nodes: np.ndarray, axis: int = 0) -> np.ndarray:
    """Second-order first derivative along ``axis`` (one-sided at the ends)."""
    return np.gradient(values, nodes, axis=axis, edge_order=2)


def _second_derivative_weights(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Three-point weights at interior nodes and four-point Lagrange weights at the ends.
    n = x.size
    interior = np.zeros((n, 3))
    h1 = x[1:-1] - x[:-2]
    h2 = x[2:] - x[1:-1]
    interior[1:-1, 0] = 2.0 / (h1 * (h1 + h2))
    interior[1:-1, 1] = -2.0 / (h1 * h2)
    interior[1:-1, 2] = 2.0 / (h2 * (h1 + h2))
    ends = np.zeros((2, 4))
    for row, idx in enumerate((np.arange(4), np.arange(n - 4, n))):
        xs = x[idx]
        x0 = x[0] if row == 0 else x[-1]
        for j in range(4):
            others = [xs[m] for m in range(4) if m != j]
            denom = np.prod([xs[j] - o for o in others])
            # second derivative of prod (x - o) at x0
            a, b, c = (x0 - o for o in others)
            ends[row, j] = 2.0 * (a + b + c) / denom
    return interior, ends


def d2_dr2(values: np.ndarray, nodes: np.ndarray, axis: int = 0) -> np.ndarray:
    """Second derivative along ``axis``.

    Compact three-point stencil in the interior, one-sided four-point stencil at
    both ends. Second order on uniform and smoothly graded grids.
    """
    x = np.asarray(nodes, dtype=float)
    if x.size < 4:
        raise DomainError("second derivative needs at least four nodes")
    v = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    interior, ends = _second_derivative_weights(x)
    shape = (-1,) + (1,) * (v.ndim - 1)
    out = np.empty_like(v)
    out[1:-1] = (
        interior[1:-1, 0].reshape(shape) * v[:-2]
        + interior[1:-1, 1].reshape(shape) * v[1:-1]
        + interior[1:-1, 2].reshape(shape) * v[2:]
    )
    out[0] = np.tensordot(ends[0], v[:4], axes=(0, 0))
    out[-1] = np.tensordot(ends[1], v[-4:], axes=(0, 0))
    return np.moveaxis(out, 0, axis)


def trapezoid(values: np.ndarray, nodes: np.ndarray, axis: int = 0) -> np.ndarray:
    """Composite trapezoid rule along ``axis``."""
    return np.trapezoid(values, nodes, axis=axis)
