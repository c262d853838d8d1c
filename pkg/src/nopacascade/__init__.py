"""Cascaded NOPA entanglement enhancement: simulation and analysis toolkit.

Models the quadrature-variance transfer of seeded, below-threshold
non-degenerate optical parametric amplifier stages, composes stages into
cascades, and provides the surrounding analyses: enhancement turning points,
pump-coupling fits and optimization, coupler/loss parameter sweeps, loss
improvement projections and the Duan inseparability check.
"""

from .states import (
    QNL,
    DuanResult,
    EprState,
    SqueezingParams,
    UncertaintyViolationError,
    db_to_variance,
    duan_sum,
    squeezing_from_variances,
    variance_to_db,
    variances_from_squeezing,
)
from .transfer import (
    AboveThresholdError,
    CascadeConfig,
    CascadeStage,
    MeasurementContext,
    ModelMode,
    NopaParams,
    PumpSpec,
    StageError,
    anticorrelation_out,
    cascade,
    correlation_out,
    detection_map,
    kappa_from_pump,
    stage_map,
)
from .langevin import (
    SIGN_AMPLIFIED,
    SIGN_DEAMPLIFIED,
    TransferCoefficients,
    output_variance,
    transfer,
)
from .analysis import (
    OPTIMAL_KAPPA,
    FitResult,
    FixedPointResult,
    OptimalKappaResult,
    SweepGrid,
    fit_chain,
    fit_kappa,
    golden_section_min,
    optimal_kappa,
    projection_improved_loss,
    sweep_gamma,
    turning_point,
)
from .estimator import NopaStage, validate_state_array

__version__ = "0.1.0"

__all__ = [
    "QNL",
    "DuanResult",
    "EprState",
    "SqueezingParams",
    "UncertaintyViolationError",
    "db_to_variance",
    "duan_sum",
    "squeezing_from_variances",
    "variance_to_db",
    "variances_from_squeezing",
    "AboveThresholdError",
    "CascadeConfig",
    "CascadeStage",
    "MeasurementContext",
    "ModelMode",
    "NopaParams",
    "PumpSpec",
    "StageError",
    "anticorrelation_out",
    "cascade",
    "correlation_out",
    "detection_map",
    "kappa_from_pump",
    "stage_map",
    "SIGN_AMPLIFIED",
    "SIGN_DEAMPLIFIED",
    "TransferCoefficients",
    "output_variance",
    "transfer",
    "OPTIMAL_KAPPA",
    "FitResult",
    "FixedPointResult",
    "OptimalKappaResult",
    "SweepGrid",
    "fit_chain",
    "fit_kappa",
    "golden_section_min",
    "optimal_kappa",
    "projection_improved_loss",
    "sweep_gamma",
    "turning_point",
    "NopaStage",
    "validate_state_array",
]
