"""Solver laboratory for anisotropic elliptic problems with
gradient-dependent lower-order terms and integrable data."""

__version__ = "0.1.0"

from .exponents import (
    DerivedExponents,
    ExponentVector,
    derive,
    sobolev_quotient,
    validate,
    young_constant,
)
from .grid import (
    FaceField,
    Field,
    Grid,
    anisotropic_norm,
    divergence_adjoint,
    forward_diff,
    integrate,
    lq_norm,
    read_field_csv,
    unit_grid,
    write_field_csv,
)
from .flux import FluxSpec, SmoothedFluxSpec
from .lower_order import LowerOrderSpec, RegularizedLowerOrder, model_constants, saturate
from .source import DatumSpec, SourceOperator, regularize_datum, singular_datum
from .solve import ProblemInstance, SolveReport, dual_norm, residual, solve_regularized
from .continuation import (
    LadderConfig,
    LadderReport,
    run_ladder,
    tail,
    truncate,
    uniform_integrability_scan,
)

__all__ = [
    "DerivedExponents", "ExponentVector", "derive", "sobolev_quotient",
    "validate", "young_constant",
    "FaceField", "Field", "Grid", "anisotropic_norm", "divergence_adjoint",
    "forward_diff", "integrate", "lq_norm", "read_field_csv", "unit_grid",
    "write_field_csv",
    "FluxSpec", "SmoothedFluxSpec",
    "LowerOrderSpec", "RegularizedLowerOrder", "model_constants", "saturate",
    "DatumSpec", "SourceOperator", "regularize_datum", "singular_datum",
    "ProblemInstance", "SolveReport", "dual_norm", "residual", "solve_regularized",
    "LadderConfig", "LadderReport", "run_ladder", "tail", "truncate",
    "uniform_integrability_scan",
]
