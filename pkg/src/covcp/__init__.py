"""Locate a change point in the covariance of high-dimensional observations.

Two steps: screen the p(p+1)/2 covariance components by a weighted debiased
contrast D and keep those above a threshold, then maximize a debiased CUSUM
statistic over split points using only the kept components.
"""

from .bootstrap import (
    ThresholdConfig,
    VarianceProfile,
    bootstrap_threshold,
    build_Z,
    row_scales,
    theoretical_threshold,
    variance_profile,
)
from .core import (
    CenteredData,
    ComponentIndex,
    ComponentSeries,
    DataMatrix,
    DataValidationError,
    center,
    component_series,
    vech_index,
    vech_unindex,
)
from .detect import (
    DetectionResult,
    PipelineConfig,
    UCurve,
    argmax_k,
    run_pipeline,
    u_curve,
    u_n,
)
from .reduction import DVector, SelectionSet, compute_D, select, v_k

__version__ = "0.1.0"

__all__ = [
    "CenteredData", "ComponentIndex", "ComponentSeries", "DataMatrix", "DataValidationError",
    "DVector", "DetectionResult", "PipelineConfig", "SelectionSet", "ThresholdConfig",
    "UCurve", "VarianceProfile", "argmax_k", "bootstrap_threshold", "build_Z", "center",
    "component_series", "compute_D", "row_scales", "run_pipeline", "select",
    "theoretical_threshold", "u_curve", "u_n", "v_k", "variance_profile", "vech_index",
    "vech_unindex",
]
