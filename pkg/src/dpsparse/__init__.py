"""Differentially private sparse linear regression with heavy-tailed responses.

Estimators: Huber-loss private IHT, absolute-loss private IHT, a non-private
Huber IHT reference, and a clipped squared-loss private baseline; plus the
noisy top-s selection primitive, seeded samplers, a synthetic-data generator,
and an experiment harness with a CLI.
"""

from ._kernels import backend_name
from .core import (
    ConstantStep,
    Dataset,
    Estimate,
    EstimatorConfig,
    PrivacyParams,
    Sample,
    StepSchedule,
    TwoPhaseStep,
    clip_features,
    l2_error,
    load_csv,
    mae,
    project_l2,
    save_csv,
    split_folds,
)
from .errors import (
    CsvParseError,
    DpSparseError,
    InvalidConfigError,
    InvalidInputError,
    InvalidParameterError,
    NumericalFailureError,
)
from .estimators import (
    EstimatorKind,
    FitReport,
    fit_ada_huber_lite,
    fit_dp_iht_h,
    fit_dp_iht_l,
    fit_dp_slr_lite,
    fit_estimator,
    probe_bound,
    sensitivity_probe,
)
from .harness import (
    ExperimentBase,
    RealDataSpec,
    SweepResult,
    SweepRow,
    SweepSpec,
    derive_seed,
    run_real,
    run_sensitivity_suite,
    run_sweep,
)
from .losses import (
    AbsoluteL1,
    Huber,
    Squared,
    batch_gradient,
    default_clip_level,
    huber_deriv,
    huber_value,
    l1_subgrad,
)
from .peeling import PeelingParams, noise_scale, peel
from .sampling import (
    RngHandle,
    SyntheticConfig,
    generate_synthetic,
    laplace,
    nu_from_zeta,
    student_t,
)

__version__ = "0.1.0"

__all__ = [
    "AbsoluteL1",
    "ConstantStep",
    "CsvParseError",
    "Dataset",
    "DpSparseError",
    "Estimate",
    "EstimatorConfig",
    "EstimatorKind",
    "ExperimentBase",
    "FitReport",
    "Huber",
    "InvalidConfigError",
    "InvalidInputError",
    "InvalidParameterError",
    "NumericalFailureError",
    "PeelingParams",
    "PrivacyParams",
    "RealDataSpec",
    "RngHandle",
    "Sample",
    "Squared",
    "StepSchedule",
    "SweepResult",
    "SweepRow",
    "SweepSpec",
    "SyntheticConfig",
    "TwoPhaseStep",
    "backend_name",
    "batch_gradient",
    "clip_features",
    "default_clip_level",
    "derive_seed",
    "fit_ada_huber_lite",
    "fit_dp_iht_h",
    "fit_dp_iht_l",
    "fit_dp_slr_lite",
    "fit_estimator",
    "generate_synthetic",
    "huber_deriv",
    "huber_value",
    "l1_subgrad",
    "l2_error",
    "laplace",
    "load_csv",
    "mae",
    "noise_scale",
    "nu_from_zeta",
    "peel",
    "probe_bound",
    "project_l2",
    "run_real",
    "run_sensitivity_suite",
    "run_sweep",
    "save_csv",
    "sensitivity_probe",
    "split_folds",
    "student_t",
]
