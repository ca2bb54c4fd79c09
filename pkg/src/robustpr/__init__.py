"""Robust sparse phase retrieval: Huber loss + l_1/2 half-thresholding MM."""

from .diagnostics import (
    CertificateReport,
    Remark5Report,
    StabilityEstimate,
    consistency_conditions,
    estimate_stability,
    linear_rate_certificate,
    remark5_quantities,
)
from .gradient import g, realify, realify_gradient, realify_quadratic, unrealify
from .metrics import (
    ExperimentReport,
    ExperimentSpec,
    align,
    error_vs_iteration,
    lambda_grid_search,
    relative_error,
    run_experiment,
)
from .model import (
    FieldTag,
    MeasurementEnsemble,
    NoiseSpec,
    apply_noise,
    deserialize_instance,
    generate_sampling,
    generate_signal,
    serialize_instance,
    synthesize_instance,
)
from .objective import (
    HuberParams,
    ObjectiveParams,
    half_norm,
    huber,
    huber_deriv,
    loss,
    objective,
    surrogate,
)
from .pgm import GrayImage, read_pgm, write_pgm
from .prox import chi, chi_oracle, half_threshold, threshold_point
from .solver import (
    IterationRecord,
    SolverConfig,
    SolverResult,
    Termination,
    fixed_point_residual,
    solve,
    write_trace_csv,
)
from .spectral import SpectralConfig, power_iteration, spectral_init

__all__ = [
    "CertificateReport",
    "ExperimentReport",
    "ExperimentSpec",
    "FieldTag",
    "GrayImage",
    "HuberParams",
    "IterationRecord",
    "MeasurementEnsemble",
    "NoiseSpec",
    "ObjectiveParams",
    "Remark5Report",
    "SolverConfig",
    "SolverResult",
    "SpectralConfig",
    "StabilityEstimate",
    "Termination",
    "align",
    "apply_noise",
    "chi",
    "chi_oracle",
    "consistency_conditions",
    "deserialize_instance",
    "error_vs_iteration",
    "estimate_stability",
    "fixed_point_residual",
    "g",
    "generate_sampling",
    "generate_signal",
    "half_norm",
    "half_threshold",
    "huber",
    "huber_deriv",
    "lambda_grid_search",
    "linear_rate_certificate",
    "loss",
    "objective",
    "power_iteration",
    "read_pgm",
    "realify",
    "realify_gradient",
    "realify_quadratic",
    "relative_error",
    "remark5_quantities",
    "run_experiment",
    "serialize_instance",
    "solve",
    "spectral_init",
    "surrogate",
    "synthesize_instance",
    "threshold_point",
    "unrealify",
    "write_pgm",
    "write_trace_csv",
]
