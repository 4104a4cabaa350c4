"""Joint learning of an orthonormal projection and a class-structured
low-rank dictionary, with sparse-coding residual classification."""

from .classifier import EvalResult, class_residual, encode, evaluate, predict
from .coder import smooth_objective_Q, smooth_objective_grad, update_all_codes, update_codes_class
from .data import (
    CorruptionSpec,
    LabeledDataset,
    corrupt,
    load_dataset,
    make_synthetic,
    normalize_columns,
    save_dataset,
)
from .dict_update import sweep_dictionary, update_subdictionary
from .errors import (
    ConfigurationError,
    DimensionError,
    NumericError,
    ParameterError,
    ParseError,
)
from .fisher import (
    CodingMatrix,
    fisher_term,
    fisher_term_class,
    fisher_term_grad,
    scatter_between,
    scatter_within,
)
from .graph import SupervisedGraph, build_graph, projection_graph_cost
from .model import Hyperparameters, ModelState, StructuredDictionary
from .prox import l1_norm, l21_norm, nuclear_norm, prox_l1, prox_l21, prox_nuclear
from .proj_update import assemble_stacked_system, blend_projection, pca_projection, projection_target
from .trainer import TrainedModel, fit, load_model, objective, save_model

__version__ = "0.1.0"

__all__ = [
    "CodingMatrix",
    "ConfigurationError",
    "CorruptionSpec",
    "DimensionError",
    "EvalResult",
    "Hyperparameters",
    "LabeledDataset",
    "ModelState",
    "NumericError",
    "ParameterError",
    "ParseError",
    "StructuredDictionary",
    "SupervisedGraph",
    "TrainedModel",
    "assemble_stacked_system",
    "blend_projection",
    "build_graph",
    "class_residual",
    "corrupt",
    "encode",
    "evaluate",
    "fisher_term",
    "fisher_term_class",
    "fisher_term_grad",
    "fit",
    "l1_norm",
    "l21_norm",
    "load_dataset",
    "load_model",
    "make_synthetic",
    "normalize_columns",
    "nuclear_norm",
    "objective",
    "pca_projection",
    "predict",
    "projection_graph_cost",
    "projection_target",
    "prox_l1",
    "prox_l21",
    "prox_nuclear",
    "save_dataset",
    "save_model",
    "scatter_between",
    "scatter_within",
    "smooth_objective_Q",
    "smooth_objective_grad",
    "sweep_dictionary",
    "update_all_codes",
    "update_codes_class",
    "update_subdictionary",
]
