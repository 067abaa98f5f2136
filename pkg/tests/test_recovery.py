from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annulus_wrinkles import FrequencyMeasure, ParameterError, construct_recovery, eval_FL, schedule
from annulus_wrinkles.checks import terms_vanish
from annulus_wrinkles.measure import k_discretize
from annulus_wrinkles.recovery import (
    cutoff,
    default_M,
    extend_density,
    measure_discrepancy,
    min_schedule_L,
    select_lambda,
    smoothstep,
)


class TestSchedule:
    def test_reference_values(self):
        p = schedule(1e6)
        assert p.M == 31 and p.n == 325500
        np.testing.assert_allclose(p.eps, 1e6 ** (-2 / 3) * 31**0.875, rtol=1e-15)
        np.testing.assert_allclose(p.delta, p.eps / 31, rtol=1e-15)
        np.testing.assert_allclose(p.L0, 1e6 / 325500, rtol=1e-15)

    def test_staircase(self):
        assert default_M(1e8) == 100 and default_M(1e8 * (1 - 1e-12)) == 99
        assert default_M(16.0) == 2

    @settings(max_examples=100, deadline=None)
    @given(st.floats(20.0, 1e15))
    def test_invariants(self, L):
        p = schedule(L)
        c = p.M**0.125
        assert c <= p.L0 < 2 * c and p.L0 >= 2
        np.testing.assert_allclose(p.L0 * p.n, L, rtol=1e-14)
        np.testing.assert_allclose(p.delta, L ** (-2 / 3) * p.M ** (-1 / 8), rtol=1e-12)

    def test_too_small(self):
        with pytest.raises(ParameterError):
            schedule(10.0)
        with pytest.raises(ParameterError):
            schedule(-1.0)
        Lmin = min_schedule_L()
        schedule(Lmin)
        with pytest.raises(ParameterError):
            schedule(0.99 * Lmin)


class TestCutoff:
    def test_values_and_bounds(self):
        R0, d = 1.5, 0.01
        r = np.linspace(R0 - 3 * d, R0 + d, 4001)
        psi, dpsi, d2psi = cutoff(r, R0, d)
        assert np.all(psi[r <= R0 - 2 * d] == 1.0) and np.all(psi[r >= R0 - d] == 0.0)
        assert np.all(np.abs(dpsi) <= 15 / (8 * d) * (1 + 1e-12))
        assert np.all(np.abs(d2psi) <= 10 / (math.sqrt(3) * d * d) * (1 + 1e-12))
        h = r[1] - r[0]
        np.testing.assert_allclose(np.gradient(psi, h), dpsi, atol=1e-3 / d)

    def test_smoothstep_endpoints(self):
        S, dS, d2S = smoothstep(np.array([0.0, 0.5, 1.0]))
        np.testing.assert_allclose(S, [0, 0.5, 1])
        np.testing.assert_allclose(dS[[0, 2]], 0)
        np.testing.assert_allclose(d2S[[0, 2]], 0)


class TestExtension:
    def test_lambda_window(self, sol, minimizer):
        p = schedule(1e8)
        binned = k_discretize(minimizer.mu, p.L0)
        lam = select_lambda(binned, p.eps)
        assert sol.cfg.R_in < lam < sol.cfg.R_in + 0.5 * math.sqrt(p.eps)
        with pytest.raises(ParameterError):
            select_lambda(binned, 1.0)

    def test_extension_matches_bbar_on_right_half(self, sol, minimizer):
        p = schedule(1e8)
        binned = k_discretize(minimizer.mu, p.L0)
        ext = extend_density(binned, select_lambda(binned, p.eps), p.eps)
        r = binned.r_grid.nodes
        right = r > ext.M0
        np.testing.assert_allclose(ext.density(r[right]), binned.b[right], rtol=1e-12, atol=1e-15)
        assert ext.r_eps < sol.cfg.R_in
        # the constraint row sums survive the dilation exactly at the nodes
        np.testing.assert_allclose(ext.density(np.array([sol.R0 + 1.0])), 0.0)


class TestConstruction:
    def test_fields_at_moderate_L(self, sol, minimizer):
        rec = construct_recovery(minimizer.mu, sol, 1e6)
        assert rec.periodicity_defect <= 1e-10
        assert rec.constraint_defect <= 1e-12
        assert rec.kernel_excess <= 1e-12
        P = 2 * np.pi * rec.params.L0
        np.testing.assert_allclose(rec.field.period, P)
        bd = eval_FL(rec.field, 1e6, sol)
        assert bd.term2 == 0.0
        assert abs(bd.term4) <= 1e-15 * bd.total

    def test_binned_measure_is_feasible(self, sol, minimizer):
        rec = construct_recovery(minimizer.mu, sol, 1e8)
        assert rec.binned.constraint_residual(sol) < 1e-12
        np.testing.assert_allclose(rec.f2_deviation, 0.0, atol=0.5)


class TestGammaRows:
    def test_vanishing_terms_and_constraint(self, gamma_rows):
        assert len(gamma_rows) == 4
        for row in gamma_rows:
            assert terms_vanish(row)
            assert row.constraint_defect < 1e-12
            assert row.periodicity_defect < 1e-10
            assert row.kernel_excess <= 1e-12

    def test_totals_above_target(self, gamma_rows):
        # a recovery sequence can only approach F_inf from above
        for row in gamma_rows:
            assert row.total > row.Finfty_target
            np.testing.assert_allclose(row.total, row.breakdown.total)

    def test_gap_decreases(self, gamma_rows):
        gaps = [row.relative_gap for row in gamma_rows]
        assert np.all(np.diff(gaps) < 0)

    def test_bulk_leading_term_close_to_target(self, gamma_rows):
        # the mollified leading term tracks the binned F_inf; the gap sits in term3 and the R0 layer
        for row in gamma_rows[1:]:
            assert abs(row.leading_hat - row.Finfty_binned) / row.Finfty_binned < 0.3

    def test_table_columns(self, gamma_rows):
        d = gamma_rows[0].as_dict()
        for key in ("L", "term1", "term6", "total", "Finfty_target", "measure_discrepancy"):
            assert key in d
        np.testing.assert_allclose(d["relative_gap"], gamma_rows[0].relative_gap)


class TestDiscrepancy:
    def test_self_distance_zero(self, minimizer):
        assert measure_discrepancy(minimizer.mu, minimizer.mu) < 1e-12

    def test_shift_distance(self, minimizer):
        mu = minimizer.mu
        shifted = FrequencyMeasure(mu.r_grid, mu.k_set + 0.5, mu.b)
        np.testing.assert_allclose(measure_discrepancy(shifted, mu), 0.5, rtol=1e-6)
