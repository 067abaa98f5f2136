from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from annulus_wrinkles import AliasingError, DomainError, RadialGrid, fourier_forward, fourier_inverse
from annulus_wrinkles.fourier import (
    check_bandwidth,
    max_harmonic,
    synthesize_sine,
    theta_antiderivative,
    theta_derivative,
    theta_lattice,
)
from annulus_wrinkles.grids import d2_dr2, d_dr, trapezoid
from annulus_wrinkles.mollify import PiecewiseLinear, exp_mollify


class TestRadialGrid:
    def test_cell_centered(self):
        g = RadialGrid.cell_centered(1.0, 2.0, 4)
        np.testing.assert_allclose(g.nodes, [1.125, 1.375, 1.625, 1.875])
        assert g.lower == 1.0 and g.upper == 2.0 and g.is_uniform

    def test_rejects_unsorted(self):
        with pytest.raises(DomainError):
            RadialGrid(np.array([1.0, 0.5]), 0.0, 2.0)

    def test_rejects_outside(self):
        with pytest.raises(DomainError):
            RadialGrid(np.array([1.0, 3.0]), 1.0, 2.0)

    def test_derivatives_second_order(self):
        errs = []
        for n in (41, 81, 161):
            x = np.geomspace(1.0, 2.0, n)
            f = np.sin(3 * x)
            e1 = np.max(np.abs(d_dr(f, x) - 3 * np.cos(3 * x)))
            e2 = np.max(np.abs(d2_dr2(f, x) + 9 * np.sin(3 * x)))
            errs.append((e1, e2))
        errs = np.array(errs)
        assert np.all(errs[:-1] / errs[1:] > 3.5)

    def test_exact_on_quadratics(self):
        x = np.sort(np.random.default_rng(0).uniform(0, 1, 12))
        f = 2 * x**2 - x + 3
        np.testing.assert_allclose(d_dr(f, x), 4 * x - 1, rtol=1e-9, atol=1e-9)
        np.testing.assert_allclose(d2_dr2(f, x), 4.0, rtol=1e-7)
        # the four-point end stencils are exact on cubics as well
        np.testing.assert_allclose(d2_dr2(x**3, x)[[0, -1]], 6 * x[[0, -1]], rtol=1e-7, atol=1e-7)

    def test_trapezoid_axis(self):
        x = np.linspace(0, 1, 11)
        v = np.outer(x, [1.0, 2.0])
        np.testing.assert_allclose(trapezoid(v, x), [0.5, 1.0])


class TestFourier:
    def test_lattice(self):
        np.testing.assert_allclose(theta_lattice(4, 2 * np.pi), [-np.pi, -np.pi / 2, 0, np.pi / 2])
        with pytest.raises(DomainError):
            theta_lattice(5, 1.0)

    def test_sine_coefficient(self):
        P = 2 * np.pi * 3.0
        th = theta_lattice(32, P)
        xi = 0.7 * np.sqrt(2) * np.sin(2 * 2 * np.pi / P * th) + 0.1
        ff = fourier_forward(xi, P)
        m = ff.harmonics
        np.testing.assert_allclose(ff.coeffs[0, m == 2], 0.7, atol=1e-14)
        np.testing.assert_allclose(ff.coeffs[0, 0], 0.1, atol=1e-14)
        np.testing.assert_allclose(np.sum(ff.coeffs**2), np.mean(xi**2), rtol=1e-13)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 6).map(lambda e: 2**e), st.integers(0, 2**31 - 1), st.floats(0.5, 20.0))
    def test_roundtrip_and_parseval(self, n, seed, scale):
        xi = np.random.default_rng(seed).standard_normal((3, n))
        P = 2 * np.pi * scale
        ff = fourier_forward(xi, P)
        np.testing.assert_allclose(fourier_inverse(ff), xi, atol=1e-12)
        np.testing.assert_allclose(ff.energy_per_node(), np.mean(xi**2, axis=1), rtol=1e-12)

    def test_synthesize_matches_forward(self):
        amps = np.array([[0.3, -0.2]])
        xi = synthesize_sine(amps, np.array([1, 3]), 16)
        ff = fourier_forward(xi, 2 * np.pi)
        np.testing.assert_allclose(ff.coeffs[0, [1, 3]], [0.3, -0.2], atol=1e-15)
        with pytest.raises(AliasingError):
            synthesize_sine(amps, np.array([1, 8]), 16)

    def test_derivatives(self):
        P = 4.0
        th = theta_lattice(64, P)
        k = 2 * np.pi * 3 / P
        f = np.cos(k * th)
        np.testing.assert_allclose(theta_derivative(f, P, 1), -k * np.sin(k * th), atol=1e-11)
        np.testing.assert_allclose(theta_derivative(f, P, 2), -k * k * f, atol=1e-10)
        F, mean = theta_antiderivative(f + 0.5, P)
        np.testing.assert_allclose(mean, 0.5)
        np.testing.assert_allclose(F, np.sin(k * th) / k, atol=1e-14)

    def test_bandwidth_rule(self):
        th = theta_lattice(16, 2 * np.pi)
        assert max_harmonic(np.sin(4 * th)) == 4
        assert check_bandwidth(np.sin(4 * th)) == 4
        with pytest.raises(AliasingError):
            check_bandwidth(np.sin(5 * th))


def _direct_convolution(pl, eps, x):
    def integrand(s):
        return np.exp(-abs(x - s) / eps) / (2 * eps) * pl(np.array([s]))[0, 0]

    lo, hi = pl.x[0], pl.x[-1]
    # constant tails integrate in closed form
    left = 0.5 * pl.y[0, 0] * np.exp(-(x - lo) / eps) if x >= lo else None
    right = 0.5 * pl.y[-1, 0] * np.exp(-(hi - x) / eps)
    pts = list(pl.x) + [x]
    mid = quad(integrand, lo, hi, points=pts, limit=400, epsabs=1e-14, epsrel=1e-13)[0]
    return left + mid + right


class TestMollify:
    def setup_method(self):
        self.pl = PiecewiseLinear(np.array([0.0, 0.3, 0.5, 1.0]), np.array([0.0, 2.0, 1.0, 0.0]))

    def test_against_quadrature(self):
        eps = 0.07
        r = np.linspace(0.01, 0.99, 9)
        m = exp_mollify(self.pl, eps, r)
        ref = [_direct_convolution(self.pl, eps, x) for x in r]
        np.testing.assert_allclose(m.a[:, 0], ref, rtol=1e-10, atol=1e-13)

    def test_derivatives_against_differences(self):
        eps, h = 0.05, 1e-5
        r = np.array([0.1, 0.4, 0.7])
        m = exp_mollify(self.pl, eps, r)
        mp = exp_mollify(self.pl, eps, r + h).a
        mm = exp_mollify(self.pl, eps, r - h).a
        np.testing.assert_allclose(m.da, (mp - mm) / (2 * h), rtol=1e-7)
        np.testing.assert_allclose(m.d2a, (mp - 2 * m.a + mm) / h**2, rtol=1e-4)

    def test_constants_preserved(self):
        pl = PiecewiseLinear(np.array([0.0, 1.0]), np.array([[2.0], [2.0]]))
        m = exp_mollify(pl, 0.1, np.linspace(-1, 2, 7))
        np.testing.assert_allclose(m.a, 2.0, rtol=1e-14)
        np.testing.assert_allclose(m.da, 0.0, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0.0, 10.0), min_size=3, max_size=8), st.floats(1e-3, 0.5))
    def test_kernel_bound(self, values, eps):
        x = np.linspace(0.0, 1.0, len(values))
        pl = PiecewiseLinear(x, np.array(values))
        m = exp_mollify(pl, eps, np.linspace(-0.2, 1.2, 57))
        assert np.all(m.a >= 0)
        assert np.all(np.abs(m.da) <= m.a / eps + 1e-12 * (1 + m.a / eps))

    def test_input_errors(self):
        with pytest.raises(ValueError):
            exp_mollify(self.pl, 0.0, np.array([0.5]))
        with pytest.raises(ValueError):
            exp_mollify(self.pl, 0.1, np.array([0.5, 0.2]))
        with pytest.raises(ValueError):
            PiecewiseLinear(np.array([0.0, 0.0]), np.array([1.0, 2.0]))
