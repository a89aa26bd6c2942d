"""SMO training for support vector machines with three working-set selectors.

``wss1`` picks the maximal violating pair, ``wss3`` uses second-order
information, and ``wsswr`` is second-order selection without reselection:
each index enters a working set at most once.
"""

from .data import (DataError, Dataset, ParseError, ScalingTable, SparseVector,
                   apply_scaling, kfold_split, load_libsvm, load_named_dataset,
                   parse_libsvm, scale_to_unit_interval, write_libsvm)
from .kernel import KernelCache, KernelSpec, QMatrix, diag_q, kernel_eval, q_column
from .model import Metrics, TrainedModel, evaluate, load_model, predict, save_model
from .selection import SELECTORS, SelectionResult, select_wss1, select_wss3, select_wsswr
from .solver import SolverParams, TrainingError, train

__all__ = [
    "DataError", "Dataset", "ParseError", "ScalingTable", "SparseVector",
    "apply_scaling", "kfold_split", "load_libsvm", "load_named_dataset",
    "parse_libsvm", "scale_to_unit_interval", "write_libsvm",
    "KernelCache", "KernelSpec", "QMatrix", "diag_q", "kernel_eval", "q_column",
    "Metrics", "TrainedModel", "evaluate", "load_model", "predict", "save_model",
    "SELECTORS", "SelectionResult", "select_wss1", "select_wss3", "select_wsswr",
    "SolverParams", "TrainingError", "train",
]
