"""Look-up-embedding CNN, LSTM and GRU classifiers in plain numpy."""

import numpy as np

from . import functional
from .estimators import CNNClassifier, GRUClassifier, LSTMClassifier
from .networks import NETWORKS, CnnNet, GruNet, LstmNet
from .training import TrainingDiverged, grad_check, sgd_train

__all__ = [
    "CNNClassifier",
    "LSTMClassifier",
    "GRUClassifier",
    "CnnNet",
    "LstmNet",
    "GruNet",
    "TrainingDiverged",
    "embed",
    "conv1d_relu_maxpool",
    "cnn_forward",
    "lstm_forward",
    "gru_forward",
    "train_neural",
    "grad_check",
    "functional",
    "NETWORKS",
    "sgd_train",
]

_ESTIMATORS = {"cnn": CNNClassifier, "lstm": LSTMClassifier, "gru": GRUClassifier}


def embed(table, seq):
    """Rows of ``table`` for one :class:`IndexSequence` (or index array)."""
    indices = getattr(seq, "indices", seq)
    return functional.embed(table, indices)


def conv1d_relu_maxpool(x, weight, bias):
    pooled, _ = functional.conv1d_relu_maxpool(x, weight, bias)
    return pooled


def _single(seq):
    return np.asarray(getattr(seq, "indices", seq))[None, :]


def cnn_forward(model, seq, train_mode=False, rng=None, dropout_rate=0.0):
    probs, _ = model.forward(_single(seq), train=train_mode, rng=rng, dropout_rate=dropout_rate)
    return probs[0]


def lstm_forward(model, seq):
    return model.forward(_single(seq))[0][0]


def gru_forward(model, seq):
    return model.forward(_single(seq))[0][0]


def train_neural(kind, X, y, seed=0, **hyper):
    """Fit a CNN/LSTM/GRU classifier on encoded index arrays."""
    return _ESTIMATORS[kind](random_state=seed, **hyper).fit(X, y)
