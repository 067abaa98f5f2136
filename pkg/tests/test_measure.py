from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from annulus_wrinkles import (
    ConvergenceError,
    DomainError,
    FrequencyMeasure,
    InvalidMeasureError,
    MinimizeOptions,
    RadialGrid,
    default_k_set,
    equipartition_report,
    eval_Finfty,
    finfty_gradient,
    fourier_forward,
    k_discretize,
    measure_from_field,
    measure_grid,
    minimize_Finfty,
    single_frequency_measure,
    smallk_threshold,
)
from annulus_wrinkles.checks import random_feasible_measure
from annulus_wrinkles.fourier import theta_lattice
from annulus_wrinkles.measure import (
    FinftyOperator,
    k_discretize_bound,
    project_constraint,
    project_simplex_rows,
    smallk_mass,
)

FINFTY_REF = 5.728956982006146  # 200 x 64 minimizer, certified by the conic dual bound


def _small(sol, nr=24, nk=6):
    return measure_grid(sol, nr), default_k_set(nk, n_geometric=3)


class TestFrequencyMeasure:
    def test_validation(self, sol):
        grid, k = _small(sol)
        with pytest.raises(InvalidMeasureError):
            FrequencyMeasure(grid, k, -np.ones((grid.size, k.size)))
        with pytest.raises(InvalidMeasureError):
            FrequencyMeasure(grid, k[::-1], np.ones((grid.size, k.size)))
        with pytest.raises(InvalidMeasureError):
            FrequencyMeasure(grid, k, np.ones((grid.size + 1, k.size)))
        with pytest.raises(InvalidMeasureError):
            FrequencyMeasure(grid, k, np.full((grid.size, k.size), np.nan))

    def test_grid_excludes_R0(self, sol):
        grid = measure_grid(sol, 10)
        np.testing.assert_allclose(sol.R0 - grid.nodes[-1], 0.5 * (sol.R0 - 1.0) / 10)

    def test_outside_nodes_rejected(self, sol):
        grid = RadialGrid(np.array([1.1, 1.3]), 1.0, 1.4)
        mu = FrequencyMeasure(grid, np.array([2.0]), np.ones((2, 1)))
        with pytest.raises(DomainError):
            eval_Finfty(mu, sol)


class TestKSet:
    def test_hybrid_layout(self):
        k = default_k_set(64)
        assert k.size == 64 and k[0] == 1.0 and k[-1] == 40.0
        assert np.all(np.diff(k) > 0)
        ratios = k[1:48] / k[:47]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-10)
        np.testing.assert_allclose(np.diff(k[47:]), k[47] - k[46], rtol=1e-6)

    def test_pure_geometric(self):
        np.testing.assert_allclose(default_k_set(5, 1.0, 16.0, n_geometric=5), [1, 2, 4, 8, 16])

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            default_k_set(4, n_geometric=8)


class TestFinfty:
    def test_single_frequency_bending_matches_quadrature(self, sol):
        k = 3.0
        exact = math.pi * quad(lambda r: k * k * (-2 * r * sol.ustar(r)) / r**3, 1.0, sol.R0)[0]
        mu = single_frequency_measure(sol, measure_grid(sol, 1600), np.array([k]), 0)
        np.testing.assert_allclose(eval_Finfty(mu, sol).bending, exact, rtol=1e-6)

    def test_single_frequency_log_slope(self, sol):
        # near R0 the profile is linear with slope 2C, so each halving of the
        # spacing adds pi C^2 log 2 / (2 k^2) to the stretching part
        k = 3.0
        vals = [eval_Finfty(single_frequency_measure(sol, measure_grid(sol, n), np.array([k]), 0), sol).stretching
                for n in (400, 800, 1600, 3200)]
        increments = np.diff(vals)
        slope = math.pi * sol.C**2 * math.log(2) / (2 * k * k)
        np.testing.assert_allclose(increments, slope, rtol=2e-3)
        assert np.all(np.abs(np.diff(increments)) < 1e-3)

    def test_gradient_matches_operator(self, sol):
        grid, k = _small(sol)
        mu = random_feasible_measure(sol, grid, k, np.random.default_rng(0))
        op = FinftyOperator(sol, grid, k)
        np.testing.assert_allclose(finfty_gradient(mu, sol), op.gradient(mu.b))
        b = mu.b
        i, j, h = 5, 2, 1e-3 * b[5, 2]
        bp, bm = b.copy(), b.copy()
        bp[i, j] += h
        bm[i, j] -= h
        fd = (op.value(bp) - op.value(bm)) / (2 * h)
        np.testing.assert_allclose(fd, op.gradient(b)[i, j], rtol=1e-5)

    def test_split_sums(self, sol):
        grid, k = _small(sol)
        mu = random_feasible_measure(sol, grid, k, np.random.default_rng(1))
        v = eval_Finfty(mu, sol)
        np.testing.assert_allclose(v.total, v.stretching + v.bending, rtol=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
    def test_homogeneity(self, sol, seed, t):
        grid, k = _small(sol)
        mu = random_feasible_measure(sol, grid, k, np.random.default_rng(seed))
        np.testing.assert_allclose(eval_Finfty(mu.scaled(t), sol).total, t * eval_Finfty(mu, sol).total, rtol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
    def test_convexity(self, sol, seed, lam):
        grid, k = _small(sol)
        rng = np.random.default_rng(seed)
        m1, m2 = (random_feasible_measure(sol, grid, k, rng) for _ in range(2))
        mix = FrequencyMeasure(grid, k, lam * m1.b + (1 - lam) * m2.b)
        bound = lam * eval_Finfty(m1, sol).total + (1 - lam) * eval_Finfty(m2, sol).total
        assert eval_Finfty(mix, sol).total <= bound * (1 + 1e-12)


class TestProjection:
    def test_zero_slice_goes_to_barycenter(self):
        out = project_simplex_rows(np.zeros((1, 4)), np.array([2.0]))
        np.testing.assert_allclose(out, 0.5)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
    def test_feasible_and_idempotent(self, seed, total):
        v = np.random.default_rng(seed).normal(size=(3, 7))
        out = project_simplex_rows(v, np.full(3, total))
        assert np.all(out >= 0)
        np.testing.assert_allclose(out.sum(axis=1), total, rtol=1e-12)
        np.testing.assert_allclose(project_simplex_rows(out, np.full(3, total)), out, atol=1e-12)

    def test_project_constraint(self, sol):
        grid, k = _small(sol)
        mu = FrequencyMeasure(grid, k, np.random.default_rng(2).random((grid.size, k.size)))
        p = project_constraint(mu, sol)
        assert p.constraint_residual(sol) < 1e-12
        assert np.array_equal(project_constraint(p, sol).b, p.b)


class TestMinimizer:
    def test_reference_value(self, minimizer):
        np.testing.assert_allclose(minimizer.value.total, FINFTY_REF, rtol=1e-8)
        assert minimizer.dual_bound <= minimizer.value.total
        assert minimizer.certified_gap < 1e-6

    def test_feasible_and_below_baselines(self, sol, minimizer):
        mu = minimizer.mu
        assert minimizer.constraint_residual < 1e-10
        for j in range(mu.k_set.size):
            base = eval_Finfty(single_frequency_measure(sol, mu.r_grid, mu.k_set, j), sol).total
            assert minimizer.value.total < base

    def test_trace_monotone(self, minimizer):
        tr = np.array(minimizer.trace)
        assert np.all(np.diff(tr) <= 1e-12 * np.abs(tr[1:]))

    def test_permutation_invariance(self, sol):
        grid, k = _small(sol, 40, 8)
        a = minimize_Finfty(sol, grid, k)
        b = minimize_Finfty(sol, grid, k[np.random.default_rng(0).permutation(k.size)])
        np.testing.assert_allclose(b.value.total, a.value.total, rtol=1e-12)

    def test_deterministic(self, sol):
        grid, k = _small(sol, 40, 8)
        assert np.array_equal(minimize_Finfty(sol, grid, k).mu.b, minimize_Finfty(sol, grid, k).mu.b)

    def test_apg_monotone_and_budget_error(self, sol):
        grid, k = _small(sol, 12, 4)
        with pytest.raises(ConvergenceError) as info:
            minimize_Finfty(sol, grid, k, MinimizeOptions(method="apg", max_iter=50))
        tr = np.array(info.value.trace)
        assert tr.size == 51
        assert np.all(np.diff(tr) <= 0)

    def test_apg_does_not_beat_certified_bound(self, sol):
        grid, k = _small(sol, 12, 4)
        conic = minimize_Finfty(sol, grid, k)
        with pytest.raises(ConvergenceError) as info:
            minimize_Finfty(sol, grid, k, MinimizeOptions(method="apg", max_iter=500))
        assert info.value.trace[-1] >= conic.dual_bound

    def test_unknown_method(self, sol):
        grid, k = _small(sol)
        with pytest.raises(ValueError):
            minimize_Finfty(sol, grid, k, MinimizeOptions(method="newton"))


class TestDiagnostics:
    def test_equipartition_at_minimizer(self, sol, minimizer):
        rep = equipartition_report(minimizer.mu, sol)
        assert rep.global_gap < 0.05
        np.testing.assert_allclose(rep.bending_total * math.pi, minimizer.value.bending, rtol=1e-12)

    def test_equipartition_unbalanced(self, sol):
        grid, k = measure_grid(sol, 200), default_k_set(64)
        rep = equipartition_report(single_frequency_measure(sol, grid, k, 63), sol)
        assert rep.global_gap > 0.99

    def test_equipartition_scale_free(self, sol):
        grid, k = _small(sol)
        mu = random_feasible_measure(sol, grid, k, np.random.default_rng(3))
        a, b = equipartition_report(mu, sol), equipartition_report(mu.scaled(3.5), sol)
        np.testing.assert_allclose(a.per_k_gap, b.per_k_gap, rtol=1e-12)
        np.testing.assert_allclose(a.global_gap, b.global_gap, rtol=1e-12)

    def test_smallk_at_minimizer(self, minimizer):
        rep = smallk_threshold(minimizer.mu)
        assert rep.threshold > minimizer.mu.k_set[0]
        assert rep.mass_fraction_below < 1e-6

    def test_smallk_mass(self, sol):
        grid, k = measure_grid(sol, 50), default_k_set(8, n_geometric=4)
        mu = single_frequency_measure(sol, grid, k, 3)
        assert smallk_mass(mu, k[0]) == 0.0
        np.testing.assert_allclose(smallk_mass(mu, k[3] + 1e-9), mu.total_mass())
        with pytest.raises(ValueError):
            smallk_mass(mu, 0.0)


class TestKDiscretize:
    def test_preserves_constraint(self, sol, minimizer):
        binned = k_discretize(minimizer.mu, 3.7)
        assert binned.constraint_residual(sol) < 1e-12
        np.testing.assert_allclose(binned.k_set * 3.7, np.round(binned.k_set * 3.7), atol=1e-9)

    def test_identity_on_grid(self, sol):
        grid = measure_grid(sol, 20)
        k = np.array([0.5, 1.0, 2.5])
        mu = random_feasible_measure(sol, grid, k, np.random.default_rng(4))
        out = k_discretize(mu, 2.0)
        np.testing.assert_allclose(out.k_set, k)
        np.testing.assert_allclose(out.b, mu.b)

    @pytest.mark.parametrize("L0", [2.0, 4.0, 8.0, 16.0, 32.0])
    def test_energy_bound(self, sol, minimizer, L0):
        ratio = eval_Finfty(k_discretize(minimizer.mu, L0), sol).total / minimizer.value.total
        assert ratio <= k_discretize_bound(minimizer.mu.k_set[0], L0)

    def test_rejects_bad_L0(self, minimizer):
        with pytest.raises(ValueError):
            k_discretize(minimizer.mu, 0.0)


class TestMeasureFromField:
    def test_single_mode(self, sol):
        grid = RadialGrid.uniform(1.0, 2.0, 65)
        P = 2 * np.pi * 2.0
        th = theta_lattice(32, P)
        k = 2 * np.pi * 3 / P
        amp = 0.1 * grid.nodes
        xi = amp[:, None] * np.sqrt(2) * np.sin(k * th)[None, :]
        mu = measure_from_field(fourier_forward(xi, P, grid), sol)
        col = np.argmin(np.abs(mu.k_set - k))
        inside = grid.nodes < sol.R0
        np.testing.assert_allclose(mu.b[:, col], k**2 * amp[inside] ** 2, rtol=1e-12)
        np.testing.assert_allclose(np.delete(mu.b, col, axis=1), 0.0, atol=1e-28)
