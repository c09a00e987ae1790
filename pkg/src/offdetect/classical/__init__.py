"""Classical classifiers over TF-IDF features."""

from .linear import (
    LinearSVM,
    SoftmaxRegression,
    predict_linear,
    softmax_objective,
    svm_objective,
    train_linear_svm,
    train_logreg,
)
from .tree import (
    DecisionTree,
    DecisionTreeModel,
    RandomForest,
    entropy,
    information_gain,
    predict_forest,
    train_forest,
    train_tree,
)

__all__ = [
    "SoftmaxRegression",
    "LinearSVM",
    "DecisionTree",
    "DecisionTreeModel",
    "RandomForest",
    "softmax_objective",
    "svm_objective",
    "predict_linear",
    "train_logreg",
    "train_linear_svm",
    "train_tree",
    "train_forest",
    "predict_forest",
    "entropy",
    "information_gain",
]
