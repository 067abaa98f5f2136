"""Wrinkling of a radially stretched annular sheet: relaxed problem, excess energy, frequency measures and recovery sequences."""

from __future__ import annotations

from .config import DEFAULT_SCHEDULE, DEFAULT_TOLERANCES, GridConfig, RunConfig, load_config, parse_config
from .energy import (
    DisplacementField,
    EnergyBreakdown,
    ExcessCheck,
    eval_EL,
    eval_Eh,
    eval_FL,
    excess_form,
    excess_identity_check,
    leading_term,
    rescale_field,
)
from .errors import (
    AliasingError,
    ConfigError,
    ConstructionError,
    ConvergenceError,
    DomainError,
    HypothesisError,
    InfeasibleGeometryError,
    InternalInconsistencyError,
    InvalidConfigError,
    InvalidMeasureError,
    ParameterError,
)
from .fourier import FourierField, fourier_forward, fourier_inverse
from .grids import RadialGrid
from .io import ResultManifest, load_measure, save_measure, write_gamma_table
from .measure import (
    FinftyValue,
    FrequencyMeasure,
    MinimizeOptions,
    MinimizeResult,
    default_k_set,
    equipartition_report,
    eval_Finfty,
    finfty_gradient,
    k_discretize,
    measure_from_field,
    measure_grid,
    minimize_Finfty,
    single_frequency_measure,
    smallk_threshold,
)
from .recovery import GammaRow, RecoveryParams, construct_recovery, gamma_row, run_gamma_limsup, schedule
from .relaxed import (
    REFERENCE_CONFIG,
    LameConfig,
    RelaxedSolution,
    check_hypothesis,
    el_residual,
    eval_ustar,
    minimize_relaxed_numeric,
    relaxed_energy_closed_form,
    relaxed_energy_E0,
    solve_free_boundary,
    wrel,
)

__version__ = "0.1.0"
