"""Softmax regression and primal linear SVM trained by (sub)gradient descent."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

__all__ = [
    "SoftmaxRegression",
    "LinearSVM",
    "softmax_objective",
    "svm_objective",
    "predict_linear",
    "train_logreg",
    "train_linear_svm",
]


def _softmax(scores):
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_objective(W, b, X, y, l2):
    """Mean cross-entropy plus ``l2/2 * ||W||^2`` and its gradients.

    ``y`` holds class indices. Returns ``(loss, grad_W, grad_b)``.
    """
    n = X.shape[0]
    probs = _softmax(np.asarray(X @ W.T) + b)
    loss = -np.log(probs[np.arange(n), y]).mean() + 0.5 * l2 * np.sum(W * W)
    delta = probs
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grad_W = np.asarray(X.T @ delta).T + l2 * W
    return loss, grad_W, delta.sum(axis=0)


def svm_objective(W, b, X, Y, c):
    """``1/2 ||W||^2 + c * sum(hinge)`` summed over one-vs-rest rows.

    ``Y`` is an ``(n, rows)`` matrix of +/-1 targets. Points on the margin
    boundary take the zero subgradient.
    """
    margins = Y * (np.asarray(X @ W.T) + b)
    hinge = np.maximum(0.0, 1.0 - margins)
    loss = 0.5 * np.sum(W * W) + c * hinge.sum()
    active = (margins < 1.0) * (-Y) * c
    grad_W = np.asarray(X.T @ active).T + W
    return loss, grad_W, active.sum(axis=0)


def _check_features(model, X):
    X = check_array(X, accept_sparse="csr", dtype=np.float64)
    if X.shape[1] != model.coef_.shape[1]:
        raise ValueError(
            f"X has {X.shape[1]} features, model was fitted with {model.coef_.shape[1]}"
        )
    return X


def predict_linear(model, X):
    """Argmax over class scores, ties to the lowest class index.

    A single weight row (binary SVM) is read as a sign decision with
    ``score > 0`` selecting ``classes_[1]``.
    """
    check_is_fitted(model, "coef_")
    X = _check_features(model, X)
    scores = np.asarray(X @ model.coef_.T) + model.intercept_
    if scores.shape[1] == 1:
        idx = (scores[:, 0] > 0).astype(np.int64)
    else:
        idx = scores.argmax(axis=1)
    return model.classes_[idx]


class _LinearBase(ClassifierMixin, BaseEstimator):
    def _prepare(self, X, y):
        X, y = check_X_y(X, y, accept_sparse="csr", dtype=np.float64)
        classes, y_idx = np.unique(y, return_inverse=True)
        if len(classes) < 2:
            raise ValueError("training labels contain a single class")
        self.classes_ = classes
        return X, y_idx

    def _batches(self, n, rng):
        perm = rng.permutation(n)
        for start in range(0, n, self.batch_size):
            yield perm[start : start + self.batch_size]

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = _check_features(self, X)
        return np.asarray(X @ self.coef_.T) + self.intercept_

    def predict(self, X):
        return predict_linear(self, X)


class SoftmaxRegression(_LinearBase):
    """Multinomial logistic regression with an L2 penalty.

    Mini-batch gradient steps on the cross-entropy; the penalty is applied
    as a proximal shrink ``W / (1 + lr * l2)`` so large ``l2`` stays stable.
    The step size decays as ``learning_rate / sqrt(epoch)``.
    """

    def __init__(self, l2=1e-4, learning_rate=0.1, epochs=50, batch_size=32, random_state=0):
        self.l2 = l2
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state

    def fit(self, X, y):
        X, y_idx = self._prepare(X, y)
        n, d = X.shape
        k = len(self.classes_)
        rng = np.random.default_rng(self.random_state)
        W = np.zeros((k, d))
        b = np.zeros(k)
        curve = [softmax_objective(W, b, X, y_idx, self.l2)[0]]
        for epoch in range(1, self.epochs + 1):
            lr = self.learning_rate / np.sqrt(epoch)
            for batch in self._batches(n, rng):
                _, gW, gb = softmax_objective(W, b, X[batch], y_idx[batch], 0.0)
                W = (W - lr * gW) / (1.0 + lr * self.l2)
                b -= lr * gb
            curve.append(softmax_objective(W, b, X, y_idx, self.l2)[0])
        if not np.all(np.isfinite(curve)):
            raise FloatingPointError("logistic regression loss became non-finite")
        self.coef_, self.intercept_ = W, b
        self.loss_curve_ = np.array(curve)
        return self

    def predict_proba(self, X):
        return _softmax(self.decision_function(X))


class LinearSVM(_LinearBase):
    """Linear SVM solving the primal hinge objective by subgradient descent.

    Binary problems use one weight row with a sign decision; three or more
    classes train one-vs-rest rows. Each mini-batch step follows the
    objective divided by ``n``, which has the same minimizer.
    """

    def __init__(self, c=1.0, learning_rate=0.1, epochs=50, batch_size=32, random_state=0):
        self.c = c
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state

    def _targets(self, y_idx):
        k = len(self.classes_)
        if k == 2:
            return np.where(y_idx == 1, 1.0, -1.0)[:, None]
        Y = -np.ones((len(y_idx), k))
        Y[np.arange(len(y_idx)), y_idx] = 1.0
        return Y

    def fit(self, X, y):
        X, y_idx = self._prepare(X, y)
        n, d = X.shape
        Y = self._targets(y_idx)
        rows = Y.shape[1]
        rng = np.random.default_rng(self.random_state)
        W = np.zeros((rows, d))
        b = np.zeros(rows)
        curve = [svm_objective(W, b, X, Y, self.c)[0]]
        for epoch in range(1, self.epochs + 1):
            lr = self.learning_rate / np.sqrt(epoch)
            for batch in self._batches(n, rng):
                scale = 1.0 / len(batch)
                _, gW, gb = svm_objective(W, b, X[batch], Y[batch], self.c * scale)
                # gW includes W itself; rescale that part to 1/n of the objective
                gW += (1.0 / n - 1.0) * W
                W = W - lr * gW
                b = b - lr * gb
            curve.append(svm_objective(W, b, X, Y, self.c)[0])
        if not np.all(np.isfinite(curve)):
            raise FloatingPointError("linear SVM objective became non-finite")
        self.coef_, self.intercept_ = W, b
        self.loss_curve_ = np.array(curve)
        return self


def train_logreg(X, y, l2=1e-4, learning_rate=0.1, epochs=50, batch_size=32, seed=0):
    return SoftmaxRegression(l2, learning_rate, epochs, batch_size, seed).fit(X, y)


def train_linear_svm(X, y, c=1.0, learning_rate=0.1, epochs=50, batch_size=32, seed=0):
    return LinearSVM(c, learning_rate, epochs, batch_size, seed).fit(X, y)
