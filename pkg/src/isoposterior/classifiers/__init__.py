"""Class-weight-aware trainers behind one scoring interface."""

from .base import (
    KINDS,
    SCORE_BASED,
    LinearModel,
    TrainConfig,
    model_from_dict,
    model_to_dict,
    predict,
    score,
)
from .logreg import train_logreg
from .svm import filter_support_vectors, train_svm
from .trainer import Trainer
from .tree import TreeModel, grow_tree, prune_tree, pruning_path, select_ccp_alpha, train_tree

TRAINERS = {"svm": train_svm, "logreg": train_logreg, "tree": train_tree}

__all__ = [
    "KINDS",
    "SCORE_BASED",
    "TRAINERS",
    "LinearModel",
    "TreeModel",
    "TrainConfig",
    "Trainer",
    "filter_support_vectors",
    "grow_tree",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "prune_tree",
    "pruning_path",
    "score",
    "select_ccp_alpha",
    "train_logreg",
    "train_svm",
    "train_tree",
]
