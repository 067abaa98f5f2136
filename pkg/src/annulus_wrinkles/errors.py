"""Exception types raised across the package."""

from __future__ import annotations


class InvalidConfigError(ValueError):
    """Non-finite, non-positive or otherwise malformed input parameters."""


class HypothesisError(ValueError):
    """The load/geometry pair violates the admissibility inequalities."""


class InfeasibleGeometryError(ValueError):
    """The free-boundary quadratic has no root in the annulus."""


class InternalInconsistencyError(RuntimeError):
    """A quantity that is guaranteed by theory came out inconsistent."""


class DomainError(ValueError):
    """A point or grid lies outside the domain of the requested operation."""


class AliasingError(ValueError):
    """The angular lattice is too coarse for the bandwidth of the field."""


class InvalidMeasureError(ValueError):
    """A frequency measure has negative or non-finite densities."""


class ParameterError(ValueError):
    """Recovery parameters are outside their admissible range."""


class ConstructionError(RuntimeError):
    """A recovery field violates an identity that holds by construction."""


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its budget.

    Parameters
    ----------
    message : str
        Human readable description.
    trace : sequence of float, optional
        Objective values recorded by the solver.
    grad_norm : float, optional
        Last gradient (or projected-gradient) norm.
    """

    def __init__(self, message: str, trace=None, grad_norm: float | None = None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []
        self.grad_norm = grad_norm


class ConfigError(ValueError):
    """Schema violation in a JSON run configuration.

    Parameters
    ----------
    path : str
        Dotted key path of the offending entry.
    message : str
        What is wrong with it.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
