"""End-to-end text classifiers: preprocessing, features and model in one Pipeline."""

from __future__ import annotations

from sklearn.pipeline import Pipeline

from .classical import LinearSVM, RandomForest, SoftmaxRegression
from .features import TfidfFeatures
from .neural import CNNClassifier, GRUClassifier, LSTMClassifier
from .preprocess import SequenceEncoder, TweetPreprocessor

__all__ = ["MODEL_KINDS", "NEURAL_KINDS", "model_class", "hyperparameter_names", "build_pipeline"]

MODEL_KINDS = {
    "cnn": CNNClassifier,
    "lstm": LSTMClassifier,
    "gru": GRUClassifier,
    "logreg": SoftmaxRegression,
    "svm": LinearSVM,
    "forest": RandomForest,
}
NEURAL_KINDS = ("cnn", "lstm", "gru")


def model_class(kind):
    try:
        return MODEL_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown model {kind!r}; choose from {sorted(MODEL_KINDS)}") from None


def hyperparameter_names(kind) -> list:
    return [k for k in model_class(kind)().get_params() if k != "random_state"]


def build_pipeline(kind, preprocess_mode="none", seed=0, drop_hashtag_body=False,
                   exceptions=None, **hyper) -> Pipeline:
    """Raw tweets in, labels out.

    Neural models read padded vocabulary indices; classical models read
    TF-IDF vectors. Unknown hyperparameter names raise ``ValueError``.
    """
    known = hyperparameter_names(kind)
    unknown = sorted(set(hyper) - set(known))
    if unknown:
        raise ValueError(f"unknown hyperparameters for {kind}: {unknown}; known: {known}")
    clf = model_class(kind)(random_state=seed, **hyper)
    features = SequenceEncoder() if kind in NEURAL_KINDS else TfidfFeatures()
    return Pipeline([
        ("prep", TweetPreprocessor(preprocess_mode, drop_hashtag_body, exceptions)),
        ("features", features),
        ("clf", clf),
    ])
