"""Neural classifiers with the scikit-learn estimator interface.

Inputs are ``(n, max_len)`` integer arrays of vocabulary indices with PAD
(0) only at the tail, as produced by :class:`offdetect.preprocess.SequenceEncoder`.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .networks import CnnNet, GruNet, LstmNet
from .training import sgd_train

__all__ = ["CNNClassifier", "LSTMClassifier", "GRUClassifier"]


def _check_indices(X):
    X = check_array(X, dtype=np.int64, ensure_min_features=1)
    if X.min(initial=0) < 0:
        raise ValueError("token indices must be non-negative")
    return X


class _NeuralBase(ClassifierMixin, BaseEstimator):
    def _build(self, rng, n_rows, n_classes):
        raise NotImplementedError

    def _prepare_X(self, X):
        return X

    def fit(self, X, y):
        X = self._prepare_X(_check_indices(X))
        y = np.asarray(y)
        if len(y) != X.shape[0]:
            raise ValueError("X and y have different lengths")
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("training labels contain a single class")
        rng = np.random.default_rng(self.random_state)
        n_rows = int(X.max(initial=1)) + 1
        self.network_ = self._build(rng, max(n_rows, 2), len(self.classes_))
        self.loss_curve_ = np.array(sgd_train(
            self.network_, X, y_idx, self.epochs, self.batch_size, self.learning_rate,
            getattr(self, "dropout_rate", 0.0), self.clip_norm, rng,
        ))
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "network_")
        X = self._prepare_X(_check_indices(X))
        # unseen indices (beyond the trained table) are read as OOV
        X = np.where(X >= self.network_.embedding.shape[0], 1, X)
        out = []
        for start in range(0, X.shape[0], 512):
            out.append(self.network_.predict_proba(X[start : start + 512]))
        return np.vstack(out) if out else np.zeros((0, len(self.classes_)))

    def predict(self, X):
        # argmax returns the first maximum: ties go to the lowest class index
        return self.classes_[self.predict_proba(X).argmax(axis=1)]


class CNNClassifier(_NeuralBase):
    """Convolutional sentence classifier (embedding, conv+ReLU, max-pool, dropout, linear)."""

    def __init__(self, embed_dim=100, n_filters=64, kernel_sizes=(2, 3, 4), dropout_rate=0.5,
                 learning_rate=0.5, epochs=20, batch_size=32, clip_norm=5.0, random_state=0):
        self.embed_dim = embed_dim
        self.n_filters = n_filters
        self.kernel_sizes = kernel_sizes
        self.dropout_rate = dropout_rate
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.clip_norm = clip_norm
        self.random_state = random_state

    def _kernels(self):
        return tuple(int(k) for k in np.atleast_1d(self.kernel_sizes))

    def _prepare_X(self, X):
        # sequences must be at least as long as the widest kernel
        width = max(self._kernels())
        if X.shape[1] < width:
            X = np.pad(X, ((0, 0), (0, width - X.shape[1])))
        return X

    def _build(self, rng, n_rows, n_classes):
        return CnnNet.init(rng, n_rows, n_classes, self.embed_dim, self.n_filters,
                           self._kernels())


class _RecurrentClassifier(_NeuralBase):
    network_cls = None

    def __init__(self, embed_dim=100, hidden_size=32, head_size=16, learning_rate=1.0,
                 epochs=20, batch_size=32, clip_norm=5.0, random_state=0):
        self.embed_dim = embed_dim
        self.hidden_size = hidden_size
        self.head_size = head_size
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.clip_norm = clip_norm
        self.random_state = random_state

    def _build(self, rng, n_rows, n_classes):
        return self.network_cls.init(rng, n_rows, n_classes, self.embed_dim,
                                     self.hidden_size, self.head_size)


class LSTMClassifier(_RecurrentClassifier):
    """Single-layer LSTM read at each tweet's last real token."""

    network_cls = LstmNet


class GRUClassifier(_RecurrentClassifier):
    """Single-layer GRU read at each tweet's last real token."""

    network_cls = GruNet
