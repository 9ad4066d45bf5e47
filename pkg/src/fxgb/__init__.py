"""Fixed-point gradient-boosted trees with certification of training."""

from .fxp import FxpConfig
from .train import Dataset, Hyperparams, LeafAssignment, Model, Tree, train

__all__ = ["FxpConfig", "Dataset", "Hyperparams", "LeafAssignment", "Model", "Tree", "train"]
__version__ = "0.1.0"
