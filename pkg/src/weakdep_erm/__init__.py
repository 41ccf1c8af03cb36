"""Simulation, ERM fitting and generalization bounds for weakly dependent
affine causal time series with exogenous covariates."""

__version__ = "0.1.0"

from .acx_models import (  # noqa: E402
    ARXModel,
    CovariateSpec,
    DecaySpec,
    InnovationSpec,
    TARXModel,
    Trajectory,
    contraction_report,
    simulate,
    supervised_pairs,
)
from .bounds import BoundConstants, DependenceParams, generalization_report, moment_condition_check  # noqa: E402
from .erm import FitConfig, LossSpec, erm_fit  # noqa: E402
from .predictors import LinearARPredictor, ParamBox  # noqa: E402

__all__ = [
    "__version__",
    "ARXModel",
    "TARXModel",
    "CovariateSpec",
    "InnovationSpec",
    "DecaySpec",
    "Trajectory",
    "simulate",
    "supervised_pairs",
    "contraction_report",
    "BoundConstants",
    "DependenceParams",
    "generalization_report",
    "moment_condition_check",
    "LossSpec",
    "FitConfig",
    "erm_fit",
    "LinearARPredictor",
    "ParamBox",
]
