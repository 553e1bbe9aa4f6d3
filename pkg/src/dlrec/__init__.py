"""Training-free recommendation of deep-learning system components.

A static random-forest predictor maps any of the 27 encoded system
components to expected Top-1 accuracy; permutation importance confirms
which components deserve searching; a probability-scheduled Bayesian
optimizer recommends values for them against the predictor, so no
candidate configuration is ever actually trained.
"""

from .space import (
    ComponentSpec,
    Configuration,
    Dimension,
    Kind,
    SearchSpace,
    default_space,
    load_space,
    restrict,
    sample_uniform,
    validate,
)
from .encoding import EncodingSchema, build_schema, decode, encode
from .dataset import ModelRecord, TabularDataset, load_csv, split, to_matrix
from .forest import ForestModel, fit_forest, fit_tree, grid_search, predict
from .importance import ImportanceReport, confirm_components, permutation_importance
from .gp import GpModel, Kernel, KernelKind, fit, kernel_eval, posterior
from .bo import (
    AcquisitionMode,
    AcquisitionParams,
    baseline_acquisition,
    gamma_ei,
    omega_update,
    optimize,
    propose_next,
)
from .benchmark import benchmark
from .pipeline import RecommendationReport, predict_config, recommend

__version__ = "0.1.0"

__all__ = [
    "AcquisitionMode",
    "AcquisitionParams",
    "ComponentSpec",
    "Configuration",
    "Dimension",
    "EncodingSchema",
    "ForestModel",
    "GpModel",
    "ImportanceReport",
    "Kernel",
    "KernelKind",
    "Kind",
    "ModelRecord",
    "RecommendationReport",
    "SearchSpace",
    "TabularDataset",
    "baseline_acquisition",
    "benchmark",
    "build_schema",
    "confirm_components",
    "decode",
    "default_space",
    "encode",
    "fit",
    "fit_forest",
    "fit_tree",
    "gamma_ei",
    "grid_search",
    "kernel_eval",
    "load_csv",
    "load_space",
    "omega_update",
    "optimize",
    "permutation_importance",
    "posterior",
    "predict",
    "predict_config",
    "propose_next",
    "recommend",
    "restrict",
    "sample_uniform",
    "split",
    "to_matrix",
    "validate",
]
