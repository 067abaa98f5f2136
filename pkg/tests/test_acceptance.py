"""Acceptance criteria on the reference annulus, one test per criterion.

Each test records a pass/fail line that the terminal summary prints under
"acceptance criteria", whether or not the assertion that follows holds.
"""

from __future__ import annotations

import pytest

from annulus_wrinkles import REFERENCE_CONFIG
from annulus_wrinkles.checks import (
    check_el_order,
    check_excess_identity,
    check_finfty_structure,
    check_gamma_limsup,
    check_log_divergence,
    check_minimizer,
    check_plancherel,
    check_recovery_bounds,
    check_relaxed_oracle,
)
from annulus_wrinkles.config import DEFAULT_SCHEDULE

SEEDS = (0, 1, 2)


def _record(log, number, result):
    log[number] = result.line()
    print(result.line())
    return result


@pytest.fixture(scope="module")
def gamma_check(sol, minimizer, gamma_rows):
    return check_gamma_limsup(sol, minimizer.mu, DEFAULT_SCHEDULE, rows=gamma_rows)


class TestAcceptance:
    def test_criterion_1_relaxed_oracle(self, acceptance_log):
        res = _record(acceptance_log, 1, check_relaxed_oracle(REFERENCE_CONFIG, 2048))
        assert res.passed, res.summary

    def test_criterion_2_el_residual_order(self, acceptance_log):
        res = _record(acceptance_log, 2, check_el_order(REFERENCE_CONFIG))
        assert res.passed, res.summary

    def test_criterion_3_plancherel(self, sol, acceptance_log):
        res = _record(acceptance_log, 3, check_plancherel(sol, SEEDS))
        assert res.passed, res.summary

    def test_criterion_4_excess_identity(self, sol, acceptance_log):
        res = _record(acceptance_log, 4, check_excess_identity(sol, SEEDS))
        assert res.passed, res.summary

    def test_criterion_5_finfty_structure(self, sol, acceptance_log):
        res = _record(acceptance_log, 5, check_finfty_structure(sol, seed=0))
        assert res.passed, res.summary

    def test_criterion_6_constrained_minimization(self, sol, minimizer, acceptance_log):
        res = _record(acceptance_log, 6, check_minimizer(sol, minimizer))
        assert res.passed, res.summary

    def test_criterion_7_log_divergence(self, sol, minimizer, acceptance_log):
        res = _record(acceptance_log, 7, check_log_divergence(sol, results={200: minimizer}))
        assert res.passed, res.summary

    def test_criterion_8_gamma_limsup(self, gamma_check, acceptance_log):
        res = _record(acceptance_log, 8, gamma_check)
        assert res.passed, res.summary

    def test_criterion_9_recovery_bounds(self, sol, minimizer, acceptance_log):
        res = _record(acceptance_log, 9, check_recovery_bounds(sol, minimizer.mu, DEFAULT_SCHEDULE))
        assert res.passed, res.summary


class TestGammaLimsupParts:
    """The four parts of criterion 8 reported separately."""

    @pytest.mark.parametrize("part", ["a", "b", "c", "d"])
    def test_part(self, gamma_check, part):
        assert gamma_check.details["parts"][part], gamma_check.summary
