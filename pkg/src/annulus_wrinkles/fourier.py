"""Real Fourier analysis on a periodic angular lattice.

Samples live at ``theta_j = -P/2 + j P / n`` for ``j = 0..n-1`` with ``n`` even and
period ``P``. Frequencies are ``k = 2 pi m / P``. Coefficients follow the
orthonormal convention

    xi = a_0 + sum_{k>0} a_k sqrt(2) sin(k theta) + a_{-k} sqrt(2) cos(k theta),

so that the angular mean of ``xi^2`` equals ``sum_k a_k^2``. The Nyquist cosine
(``m = n/2``) is the one exception: it is stored without the ``sqrt(2)`` because
it is real-valued and already unit-normalized on the lattice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AliasingError, DomainError
from .grids import RadialGrid


def theta_lattice(n: int, period: float) -> np.ndarray:
    """Angular sample points ``-P/2 + j P / n``."""
    if n < 4 or n % 2:
        raise DomainError("theta_count must be an even integer >= 4")
    return -0.5 * period + period * np.arange(n) / n


def _phase(n: int) -> np.ndarray:
    # e^{i k theta_0} with theta_0 = -P/2 reduces to (-1)^m
    return np.where(np.arange(n // 2 + 1) % 2 == 0, 1.0, -1.0)


@dataclass(frozen=True, eq=False)
class FourierField:
    """Fourier coefficients ``a_k(r)`` of a periodic field.

    Attributes
    ----------
    r_grid : RadialGrid or None
    period : float
        Angular period ``P``; frequencies are multiples of ``2 pi / P``.
    theta_count : int
        Lattice size the coefficients were taken on.
    k_set : ndarray, shape (nk,)
        Signed frequencies, ordered as ``[0, 1, ..., n/2, -1, ..., -(n/2 - 1)]``
        times ``2 pi / P``. Positive entries are sine coefficients, negative entries
        cosine coefficients, and ``+n/2`` is the Nyquist cosine.
    coeffs : ndarray, shape (nr, nk)
    """

    r_grid: RadialGrid | None
    period: float
    theta_count: int
    k_set: np.ndarray
    coeffs: np.ndarray

    @property
    def harmonics(self) -> np.ndarray:
        """Integer mode numbers ``m = k P / (2 pi)``."""
        return np.rint(self.k_set * self.period / (2 * np.pi)).astype(int)

    def energy_per_node(self) -> np.ndarray:
        """``sum_k a_k(r)^2`` at every radial node."""
        return np.sum(self.coeffs**2, axis=1)


def _signed_layout(n: int, period: float) -> tuple[np.ndarray, np.ndarray]:
    half = n // 2
    pos = np.arange(0, half + 1)
    neg = -np.arange(1, half)
    m = np.concatenate([pos, neg])
    return m, 2 * np.pi * m / period


def fourier_forward(xi: np.ndarray, period: float, r_grid: RadialGrid | None = None) -> FourierField:
    """Coefficients of ``xi`` (shape ``(nr, n)`` or ``(n,)``) in the real convention."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    n = xi.shape[-1]
    theta_lattice(n, period)
    half = n // 2
    spec = np.fft.rfft(xi, axis=-1) * _phase(n) / n  # mean of xi e^{-ik theta}
    sin_part = -np.sqrt(2.0) * spec.imag[:, 1:half]
    cos_part = np.sqrt(2.0) * spec.real[:, 1:half]
    coeffs = np.concatenate(
        [spec.real[:, :1], sin_part, spec.real[:, half : half + 1], cos_part], axis=1
    )
    m, k = _signed_layout(n, period)
    return FourierField(r_grid, float(period), n, k, coeffs)


def fourier_inverse(ff: FourierField) -> np.ndarray:
    """Samples on the lattice from coefficients; exact inverse of :func:`fourier_forward`."""
    n = ff.theta_count
    half = n // 2
    c = np.asarray(ff.coeffs, dtype=float)
    spec = np.zeros((c.shape[0], half + 1), dtype=complex)
    spec[:, 0] = c[:, 0]
    spec[:, half] = c[:, half]
    # sqrt(2) (c cos + s sin) = Re(sqrt(2) (c - i s) e^{ik theta}); irfft weight 2/n per bin
    spec[:, 1:half] = (c[:, half + 1 :] - 1j * c[:, 1:half]) / np.sqrt(2.0)
    spec *= _phase(n) * n
    return np.fft.irfft(spec, n=n, axis=-1)


def synthesize_sine(amplitudes: np.ndarray, harmonics: np.ndarray, n: int) -> np.ndarray:
    """``sum_j amp_j sqrt(2) sin(m_j theta)`` on the lattice of size ``n``.

    ``amplitudes`` has shape ``(nr, nj)`` and ``harmonics`` holds distinct integer
    mode numbers in ``[1, n/2)``.
    """
    harmonics = np.asarray(harmonics, dtype=int)
    if np.any(harmonics < 1) or np.any(harmonics >= n // 2):
        raise AliasingError("sine harmonics must lie in [1, n/2)")
    spec = np.zeros((amplitudes.shape[0], n // 2 + 1), dtype=complex)
    # sqrt(2) sin(k theta) = Re(-i sqrt(2) e^{ik theta}); irfft weight 2/n per bin
    np.add.at(spec, (slice(None), harmonics), -1j * np.sqrt(2.0) * amplitudes * (n / 2.0))
    spec *= _phase(n)
    return np.fft.irfft(spec, n=n, axis=-1)


def theta_derivative(values: np.ndarray, period: float, order: int = 1) -> np.ndarray:
    """Spectral ``d^order / d theta^order`` along the last axis.

    The Nyquist bin is dropped for odd orders (its derivative is not represented on
    the lattice) and kept for even orders.
    """
    n = values.shape[-1]
    spec = np.fft.rfft(values, axis=-1)
    ik = 1j * 2 * np.pi * np.arange(n // 2 + 1) / period
    spec = spec * ik**order
    if order % 2:
        spec[..., -1] = 0.0
    return np.fft.irfft(spec, n=n, axis=-1)


def theta_antiderivative(values: np.ndarray, period: float) -> tuple[np.ndarray, np.ndarray]:
    """Zero-mean periodic antiderivative of the oscillatory part of ``values``.

    Returns ``(F, mean)`` where ``F' = values - mean`` and ``mean`` is the angular
    mean along the last axis (the slope of the discarded linear part).
    """
    n = values.shape[-1]
    spec = np.fft.rfft(values, axis=-1)
    mean = spec[..., 0].real / n
    ik = 1j * 2 * np.pi * np.arange(n // 2 + 1) / period
    ik[0] = 1.0
    spec = spec / ik
    spec[..., 0] = 0.0
    spec[..., -1] = 0.0
    return np.fft.irfft(spec, n=n, axis=-1), mean


def max_harmonic(values: np.ndarray, rtol: float = 1e-10) -> int:
    """Largest mode number carrying more than ``rtol`` of the peak amplitude."""
    spec = np.abs(np.fft.rfft(np.atleast_2d(values), axis=-1))
    peak = spec.max()
    if peak == 0:
        return 0
    active = np.nonzero(spec.max(axis=0) > rtol * peak)[0]
    return int(active[-1]) if active.size else 0


def check_bandwidth(xi: np.ndarray, rtol: float = 1e-10) -> int:
    """Raise ``AliasingError`` unless ``n >= 4 * max_harmonic(xi)``.

    The quartic terms (squares of ``(d_theta xi)^2``) need four times the field
    bandwidth to be integrated exactly by the lattice mean.
    """
    n = xi.shape[-1]
    m = max_harmonic(xi, rtol)
    if n < 4 * m:
        raise AliasingError(f"theta_count={n} below 4 x field bandwidth {m}")
    return m
