"""Mixed-variable Bayesian optimization with probabilistic reparameterization."""
from ._backend import BACKEND
from .acquisition import (
    EI,
    LCB,
    MAX_VARIANCE,
    AcquisitionFunction,
    MafController,
    optimize_acquisition_kr,
    propose_pr,
)
from .gp import Dataset, GpModel, fit_map, log_marginal_likelihood, posterior
from .kernels import PRESETS, BoundKernel, HyperParams, KernelSpec, bind, get_preset, kernel_eval
from .reparam import (
    PrSettings,
    ProbabilisticObjective,
    ThetaLayout,
    optimize_acquisition_pr,
    probabilistic_objective,
    sample_candidates,
    transform,
)
from .space import ParameterSpec, SearchSpace

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "EI", "LCB", "MAX_VARIANCE", "PRESETS", "AcquisitionFunction", "BoundKernel", "Dataset",
    "GpModel", "HyperParams", "KernelSpec", "MafController", "ParameterSpec", "PrSettings",
    "ProbabilisticObjective", "SearchSpace", "ThetaLayout", "bind", "fit_map", "get_preset", "kernel_eval",
    "log_marginal_likelihood", "optimize_acquisition_kr", "optimize_acquisition_pr", "posterior",
    "probabilistic_objective", "propose_pr", "sample_candidates", "transform",
]
