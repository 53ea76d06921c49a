"""Local learning rules: symbolic rule algebra, expectation dynamics,
network simulation, Boolean learnability, deep-targets training, the
learning-channel benchmark, and Hopfield isometry invariance."""

from ._kernels import USING_NUMBA
from .datasets import TrainingSet
from .moments import DataMoments, compute_moments
from .netsim import LayeredNet, TransferFunction, train_unit
from .rules import LearningRule, RuleTerm, catalog, classify_degrees, get_rule

__version__ = "0.1.0"

__all__ = [
    "USING_NUMBA", "__version__",
    "TrainingSet", "DataMoments", "compute_moments",
    "LayeredNet", "TransferFunction", "train_unit",
    "LearningRule", "RuleTerm", "catalog", "classify_degrees", "get_rule",
]
